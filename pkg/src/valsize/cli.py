"""``valsize`` command line.

Exit status: 0 success, 2 configuration error, 3 numeric precondition
failure, 4 simulation degeneracy.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from collections import OrderedDict
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .config import ScenarioConfig, load_config, parse_config, resolve_seed
from .errors import ConfigError, PreconditionError, SimulationDegeneracyError
from .measures import CIMethod, MeasureKind, build_confusion, estimate_all
from .report import (
    BinaryReport,
    InverseReport,
    InverseRow,
    MeasuresReport,
    SurvivalReport,
    emit_report,
    to_csv,
)
from .riley import RileyInputs, fisher_info
from .riskdist import anticipated_measures, lp_samples, sample_cohort
from .samplesize import ciw_at_n, plan_binary
from .survival import pseudo_confusion, pseudo_observations, simulate_ciw

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_DEGENERATE = 0, 2, 3, 4

log = logging.getLogger("valsize")


def _provenance(cfg: ScenarioConfig, seed: int, **extra) -> dict:
    prov = {
        "tool": "valsize",
        "version": __version__,
        "backend": BACKEND,
        "mode": cfg.mode,
        "seed": seed,
        "interval_method": cfg.interval_method.value,
    }
    if cfg.risk_distribution is not None:
        prov["cohort_size"] = cfg.cohort_size
        prov["risk_distribution"] = cfg.risk_distribution.describe()
    prov.update(extra)
    return prov


def _anticipations(cfg: ScenarioConfig, seed: int):
    """Anticipated performance per threshold, plus the cohort when one was drawn."""
    if cfg.anticipated:
        return list(cfg.anticipated), None
    cohort = sample_cohort(cfg.risk_distribution, cfg.cohort_size, seed)
    return [anticipated_measures(cohort, t) for t in cfg.thresholds], cohort


def _columns(targets):
    """Group targets into report columns by (mode, magnitude), keeping order."""
    cols = OrderedDict()
    for t in targets:
        cols.setdefault(t.column(), []).append(t)
    return cols


def run(cfg: ScenarioConfig, seed: Optional[int] = None, workers: int = 1, raw_csv=None):
    """Execute a scenario and return its report object."""
    seed = resolve_seed(seed, cfg.seed)
    if cfg.mode == "survival":
        scenario = cfg.survival
        scenario.seed = seed
        sim = simulate_ciw(scenario, workers=workers, keep_raw=raw_csv is not None)
        if raw_csv is not None:
            Path(raw_csv).write_text(to_csv(sim.raw))
        return SurvivalReport(sim, _provenance(cfg, seed, repetitions=scenario.repetitions))

    anticipations, cohort = _anticipations(cfg, seed)

    if cfg.mode == "binary_inverse":
        kinds = sorted({t.kind for t in cfg.targets}, key=[k.value for k in MeasureKind].index)
        kinds = [MeasureKind(k) for k in kinds] or list(MeasureKind)
        rows = [InverseRow(a.threshold, ciw_at_n(k, a, cfg.n, cfg.interval_method))
                for k in kinds for a in anticipations]
        return InverseReport(cfg.n, rows, anticipations, _provenance(cfg, seed))

    riley = None
    if cfg.riley is not None and cfg.riley.targets():
        spec = cfg.riley
        fisher = None
        if spec.calibration_slope is not None:
            fisher = fisher_info(lp_samples(cohort), spec.assumption)
        riley = RileyInputs(cstatistic=spec.cstatistic, fisher=fisher, oe=spec.oe,
                            calibration_slope=spec.calibration_slope, cstat=spec.cstat,
                            snb=spec.snb, assumption=spec.assumption)
    cols = _columns(cfg.targets) or OrderedDict([("established", [])])
    prov = _provenance(cfg, seed)
    plans = []
    for targets in cols.values():
        plan = plan_binary(anticipations, targets, riley, cfg.interval_method)
        plan.provenance = prov
        plans.append(plan)
    return BinaryReport(list(cols), plans, anticipations, prov)


def _read_predictions(path: Path):
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        rows = list(reader)
    try:
        if {"prob", "outcome"} <= set(fields):
            return "binary", {
                "prob": np.array([float(r["prob"]) for r in rows]),
                "outcome": np.array([int(float(r["outcome"])) for r in rows]),
            }
        if {"time", "event", "risk"} <= set(fields):
            return "survival", {k: np.array([float(r[k]) for r in rows]) for k in ("time", "event", "risk")}
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: unreadable value ({e})") from None
    raise ConfigError(f"{path}: need columns prob,outcome or time,event,risk; found {','.join(fields)}")


def run_measures(path, thresholds: List[float], horizon=None, method=CIMethod.WALD) -> MeasuresReport:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such file: {path}")
    for i, t in enumerate(thresholds):
        if not 0 < t < 1:
            raise ConfigError(f"threshold {t} outside (0, 1)", f"thresholds/{i}")
    kind, cols = _read_predictions(path)
    method = CIMethod(method)
    kinds = tuple(MeasureKind) if method is CIMethod.WALD else tuple(k for k in MeasureKind if k is not MeasureKind.F1)
    if kind == "survival":
        if horizon is None:
            raise ConfigError("survival predictions need --horizon")
        pseudo = pseudo_observations((cols["time"], cols["event"].astype(np.int64)), horizon)
        risks = cols["risk"]
    confusion, estimates = [], []
    for t in thresholds:
        if kind == "binary":
            cm = build_confusion(cols["prob"], cols["outcome"], t)
        else:
            cm = pseudo_confusion(pseudo, risks, t)
        confusion.append({"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn})
        estimates.append(estimate_all(cm, method, kinds))
    prov = {"tool": "valsize", "version": __version__, "backend": BACKEND, "input": path.name,
            "rows": int(len(next(iter(cols.values())))), "interval_method": method.value}
    if horizon is not None:
        prov["horizon"] = horizon
    return MeasuresReport(list(thresholds), confusion, estimates, prov)


def _binary_config(args) -> dict:
    raw = {"mode": "binary_inverse" if args.at_n is not None else "binary"}
    if args.beta:
        raw["risk_distribution"] = {"beta": args.beta}
    elif args.probs_file:
        raw["risk_distribution"] = {"empirical_file": str(Path(args.probs_file).resolve())}
    if args.threshold:
        raw["thresholds"] = args.threshold
    targets = [{"measure": m, "ciw": w} for w in args.ciw or [] for m in args.measure]
    targets += [{"measure": m, "se": s} for s in args.se or [] for m in args.measure]
    if args.at_n is not None:
        raw["n"] = args.at_n
        targets = targets or [{"measure": m, "ciw": 0.1} for m in args.measure]
    if targets:
        raw["targets"] = targets
    riley = {}
    for key in ("cstatistic", "cstat_ciw", "oe_ciw", "slope_ciw", "snb_ciw"):
        v = getattr(args, key)
        if v is not None:
            riley[key] = v
    if riley:
        raw["riley"] = riley
    if args.method:
        raw["interval_method"] = args.method
    if args.cohort_size is not None:
        raw["cohort_size"] = args.cohort_size
    return raw


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="valsize",
        description="Minimum sample size for external validation of a risk prediction model.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, help="random seed (overrides config and $VALSIZE_SEED)")
        sp.add_argument("--format", choices=["text", "json", "csv"], help="output format (default text)")
        sp.add_argument("-o", "--output", help="write the report here instead of stdout")

    b = sub.add_parser("binary", help="solve for N, or report expected intervals with --at-n")
    common(b)
    b.add_argument("--config", help="JSON scenario document; flags below are ignored when given")
    src = b.add_mutually_exclusive_group()
    src.add_argument("--beta", nargs=2, type=float, metavar=("A", "B"),
                     help="predicted risks follow Beta(A, B)")
    src.add_argument("--probs-file", help="one predicted probability per line, resampled")
    b.add_argument("--threshold", type=float, action="append", help="classification threshold (repeatable)")
    b.add_argument("--ciw", type=float, action="append", help="target 95%% CI width (repeatable)")
    b.add_argument("--se", type=float, action="append", help="target standard error (repeatable)")
    b.add_argument("--measure", action="append",
                   choices=[k.value for k in MeasureKind] + ["all"],
                   help="measures to size (default all)")
    b.add_argument("--cstatistic", type=float, help="anticipated c-statistic")
    b.add_argument("--cstat-ciw", type=float, help="target CI width for the c-statistic")
    b.add_argument("--oe-ciw", type=float, help="target CI width for O/E")
    b.add_argument("--slope-ciw", type=float, help="target CI width for the calibration slope")
    b.add_argument("--snb-ciw", type=float, help="target CI width for standardised net benefit")
    b.add_argument("--method", choices=[m.value for m in CIMethod], help="interval method (default wald)")
    b.add_argument("--cohort-size", type=int, help="size of the simulated reference cohort")
    b.add_argument("--at-n", type=int, help="report expected intervals at this N instead of solving")

    s = sub.add_parser("survival", help="simulate interval widths at candidate N for time-to-event data")
    common(s)
    s.add_argument("--config", required=True, help="JSON scenario document with a 'survival' block")
    s.add_argument("--repetitions", type=int, help="override the number of repetitions")
    s.add_argument("--workers", type=int, default=1, help="threads for the repetitions")
    s.add_argument("--raw-csv", help="also write per-repetition estimates to this CSV")

    m = sub.add_parser("measures", help="estimates and CIs from a predictions file")
    common(m)
    m.add_argument("predictions", help="CSV with prob,outcome or time,event,risk columns")
    m.add_argument("--threshold", type=float, action="append", required=True)
    m.add_argument("--horizon", type=float, help="time horizon for survival predictions")
    m.add_argument("--method", choices=[x.value for x in CIMethod], default="wald")
    return p


def _dispatch(args):
    if args.command == "measures":
        return run_measures(args.predictions, args.threshold, args.horizon, args.method), "text"
    if args.command == "survival":
        cfg = load_config(args.config)
        if cfg.mode != "survival":
            raise ConfigError("expected mode 'survival'", "mode")
        if args.repetitions is not None:
            if args.repetitions < 1:
                raise ConfigError("--repetitions must be >= 1")
            cfg.survival.repetitions = args.repetitions
        return run(cfg, args.seed, workers=args.workers, raw_csv=args.raw_csv), cfg.format
    if args.config:
        cfg = load_config(args.config)
        if args.at_n is not None:
            cfg.mode, cfg.n = "binary_inverse", args.at_n
    else:
        args.measure = ["all"] if not args.measure else args.measure
        cfg = parse_config(_binary_config(args))
    if cfg.mode == "survival":
        raise ConfigError("use the 'survival' subcommand for survival scenarios", "mode")
    return run(cfg, args.seed), cfg.format


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="valsize: %(message)s")
    try:
        report, fmt = _dispatch(args)
        text = emit_report(report, args.format or fmt)
    except ConfigError as e:
        print(f"valsize: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as e:
        where = f" [criterion: {e.criterion}]" if e.criterion else ""
        print(f"valsize: {e}{where}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SimulationDegeneracyError as e:
        print(f"valsize: simulation degenerate: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
