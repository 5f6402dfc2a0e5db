"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--size 1000000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from valsize import _fallback

try:
    from valsize import _core
except ImportError:
    _core = None


def cases(size, seed=1):
    rng = np.random.default_rng(seed)
    p = rng.beta(1.33, 1.75, size)
    lp = np.log(p) - np.log1p(-p)
    n_surv = min(size, 200_000)
    t = np.sort(rng.exponential(5.0, n_surv))
    e = (rng.random(n_surv) < 0.7).astype(np.int64)
    return {
        "confusion_sums": lambda k: k.confusion_sums(p, p, 0.3),
        "fisher_sums": lambda k: k.fisher_sums(lp, 0.0, 1.0),
        f"loo_km_survival (N={n_surv})": lambda k: k.loo_km_survival(t, e, 3.0),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not built; only the fallback is timed")
    print(f"{'kernel':32s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(args.size).items():
        py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat)) * 1e3
        if _core is None:
            print(f"{name:32s} {py:10.2f} {'-':>10s} {'-':>8s}")
            continue
        cy = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {py:10.2f} {cy:10.2f} {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
