"""Pure numpy versions of the kernels in ``_core.pyx``.

Selected automatically when the compiled extension is unavailable, or
explicitly with ``VALSIZE_PURE=1``.
"""
import math

import numpy as np


def confusion_sums(scores, weights, threshold):
    scores = np.asarray(scores, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if scores.shape != weights.shape:
        raise ValueError("scores and weights differ in length")
    pos = scores > threshold
    wp = weights[pos]
    wn = weights[~pos]
    return (
        math.fsum(wp),
        math.fsum(1.0 - wp),
        math.fsum(wn),
        math.fsum(1.0 - wn),
    )


def fisher_sums(lp, alpha, beta):
    lp = np.asarray(lp, dtype=np.float64)
    e = np.exp(-np.abs(alpha + beta * lp))
    a = e / (1.0 + e) ** 2
    return math.fsum(a), math.fsum(lp * a), math.fsum(lp * lp * a)


def loo_km_survival(times, events, horizon):
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=np.int64)
    n = times.shape[0]

    # distinct event times up to the horizon, with deaths and numbers at risk
    mask = (events == 1) & (times <= horizon)
    u, d = np.unique(times[mask], return_counts=True)
    at_risk = n - np.searchsorted(times, u, side="left")
    m = u.shape[0]

    safe = np.maximum(at_risk - 1, 1)
    g = np.where(at_risk > 1, 1.0 - d / safe, 0.0)
    h = np.where(at_risk > 1, 1.0 - (d - 1) / safe, 1.0)
    f = 1.0 - d / at_risk

    gpre = np.ones(m + 1)
    gpre[1:] = np.cumprod(g)
    fsuf = np.ones(m + 1)
    fsuf[:m] = np.cumprod(f[::-1])[::-1]

    k = np.searchsorted(u, times, side="right")
    own = (events == 1) & (times <= horizon)
    out = gpre[k] * fsuf[k]
    ko = k[own]
    out[own] = gpre[ko - 1] * h[ko - 1] * fsuf[ko]
    return float(fsuf[0]), out
