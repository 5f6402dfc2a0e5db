"""Minimum sample size for the six threshold-based measures.

Closed forms target a Wald standard error; :func:`n_iterative_agresti_coull`
searches for the smallest n whose Agresti-Coull interval is narrow enough.
:func:`plan_binary` combines any number of criteria and reports the binding
one.
"""
from __future__ import annotations

import math
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateInputError, InconsistentTargetsError, PreconditionError
from .measures import (
    PROPORTION_KINDS,
    Z,
    CIMethod,
    MeasureEstimate,
    MeasureKind,
    PerformanceAnticipation,
    agresti_coull_center,
    cov_precision_recall,
    f1_se,
    measure_se,
    wald_interval,
)
from .results import (
    PrecisionTarget,
    SampleSizePlan,
    SampleSizeResult,
    TargetMode,
    ceil_n,
    ciw_to_se,
    events_from_n,
)
from .riley import RileyInputs, riley_results

__all__ = [
    "PerformanceAnticipation",
    "PrecisionTarget",
    "SampleSizePlan",
    "SampleSizeResult",
    "TargetMode",
    "ciw_at_n",
    "ciw_to_se",
    "events_from_n",
    "n_accuracy",
    "n_f1",
    "n_for",
    "n_iterative_agresti_coull",
    "n_npv",
    "n_ppv",
    "n_sensitivity",
    "n_specificity",
    "plan_binary",
]


def _rate(name, v):
    if not 0.0 < v < 1.0:
        raise DegenerateInputError(
            f"{name} = {v}: rates of 0 or 1 carry infinite or zero information",
            criterion=name,
        )


def _se(kind, se):
    if not se > 0:
        raise PreconditionError(f"target SE {se} must be positive", criterion=kind)


def _finish(kind, exact, se_at, prevalence, value, target_se):
    n = ceil_n(exact)
    se = se_at(n)
    return SampleSizeResult(
        criterion=kind.value,
        n=n,
        events=None if prevalence is None else events_from_n(n, prevalence),
        achieved_se=se,
        achieved_ciw=2 * Z * se,
        exact=exact,
        value=value,
        target=PrecisionTarget.se(kind, target_se),
    )


def n_accuracy(acc, target_se, prevalence=None) -> SampleSizeResult:
    _rate("accuracy", acc)
    _se("accuracy", target_se)
    if prevalence is not None:
        _rate("prevalence", prevalence)
    v = acc * (1 - acc)
    return _finish(MeasureKind.ACCURACY, v / target_se**2, lambda n: math.sqrt(v / n),
                   prevalence, acc, target_se)


def n_specificity(spec, prevalence, target_se) -> SampleSizeResult:
    _rate("specificity", spec)
    _rate("prevalence", prevalence)
    _se("specificity", target_se)
    v = spec * (1 - spec) / (1 - prevalence)
    return _finish(MeasureKind.SPECIFICITY, v / target_se**2, lambda n: math.sqrt(v / n),
                   prevalence, spec, target_se)


def n_sensitivity(sens, prevalence, target_se) -> SampleSizeResult:
    _rate("sensitivity", sens)
    _rate("prevalence", prevalence)
    _se("sensitivity", target_se)
    v = sens * (1 - sens) / prevalence
    return _finish(MeasureKind.SENSITIVITY, v / target_se**2, lambda n: math.sqrt(v / n),
                   prevalence, sens, target_se)


def n_ppv(ppv, sens, prevalence, target_se) -> SampleSizeResult:
    _rate("ppv", ppv)
    _rate("sensitivity", sens)
    _rate("prevalence", prevalence)
    _se("ppv", target_se)
    v = ppv**2 * (1 - ppv) / (prevalence * sens)
    return _finish(MeasureKind.PPV, v / target_se**2, lambda n: math.sqrt(v / n),
                   prevalence, ppv, target_se)


def n_npv(npv, sens, spec, prevalence, target_se) -> SampleSizeResult:
    _rate("npv", npv)
    _rate("sensitivity", sens)
    _rate("specificity", spec)
    _rate("prevalence", prevalence)
    _se("npv", target_se)
    v = npv * (1 - npv) / (spec * (1 - prevalence) + prevalence * (1 - sens))
    return _finish(MeasureKind.NPV, v / target_se**2, lambda n: math.sqrt(v / n),
                   prevalence, npv, target_se)


def f1_se_at_targets(n, ppv, sens, spec, prevalence, target_se_p, target_se_r) -> float:
    """F1 SE at ``n`` with precision and recall SEs held at their targets,
    the quantity the closed-form F1 solver inverts."""
    cov = cov_precision_recall(ppv, sens, spec, prevalence, n)
    return f1_se(ppv, sens, target_se_p, target_se_r, cov)


def n_f1(ppv, sens, spec, prevalence, target_se_f1, target_se_p=None, target_se_r=None,
         f1=None) -> SampleSizeResult:
    """Closed-form n for the F1-score.

    Precision and recall targets default to the F1 target.
    """
    for name, v in (("ppv", ppv), ("sensitivity", sens), ("specificity", spec), ("prevalence", prevalence)):
        _rate(name, v)
    _se("f1", target_se_f1)
    se_p = target_se_f1 if target_se_p is None else target_se_p
    se_r = target_se_f1 if target_se_r is None else target_se_r
    _se("f1", se_p)
    _se("f1", se_r)
    P, R = ppv, sens
    pq = P * (1 - P)
    num = 2 * P**2 * R**2 * (pq * (1 - R) / prevalence + pq * spec / (1 - prevalence))
    den = target_se_f1**2 * (P + R) ** 4 / 4 - R**4 * se_p**2 - P**4 * se_r**2
    if not den > 0:
        raise InconsistentTargetsError(
            "inconsistent precision targets: the precision and recall SE targets alone "
            "already imply a wider F1 interval than requested",
            criterion="f1",
        )
    value = f1 if f1 is not None else 2 * P * R / (P + R)
    res = _finish(
        MeasureKind.F1, num / den,
        lambda n: f1_se_at_targets(n, P, R, spec, prevalence, se_p, se_r),
        prevalence, value, target_se_f1,
    )
    return res


def n_for(kind, anticipation: PerformanceAnticipation, target_se: float) -> SampleSizeResult:
    """Closed-form n for ``kind`` from an anticipation record."""
    kind = MeasureKind(kind)
    a = anticipation
    phi = a.prevalence
    if kind is MeasureKind.ACCURACY:
        res = n_accuracy(a.value(kind), target_se, phi)
    elif kind is MeasureKind.SPECIFICITY:
        res = n_specificity(a.require(kind), phi, target_se)
    elif kind is MeasureKind.SENSITIVITY:
        res = n_sensitivity(a.require(kind), phi, target_se)
    elif kind is MeasureKind.PPV:
        res = n_ppv(a.value(kind), a.require(MeasureKind.SENSITIVITY), phi, target_se)
    elif kind is MeasureKind.NPV:
        res = n_npv(a.value(kind), a.require(MeasureKind.SENSITIVITY),
                    a.require(MeasureKind.SPECIFICITY), phi, target_se)
    else:
        res = n_f1(a.value(MeasureKind.PPV), a.require(MeasureKind.SENSITIVITY),
                   a.require(MeasureKind.SPECIFICITY), phi, target_se, f1=a.value(kind))
    res.threshold = a.threshold
    return res


def _ac_center(kind, anticipation, denom, use_reference):
    ref = anticipation.reference if use_reference else None
    if ref is not None:
        return agresti_coull_center(ref.numerator(kind), ref.denominator(kind))
    x = round(anticipation.value(kind) * denom)
    return agresti_coull_center(x, denom)


def agresti_coull_width(kind, anticipation, n, use_reference=True) -> float:
    """Expected unclamped Agresti-Coull width at total sample size ``n``.

    With a reference cohort attached to the anticipation, the adjusted
    proportion comes from the cohort's counts and only the spread scales with
    ``n``. Without one, the counts implied at ``n`` are rounded and adjusted.
    """
    d = n * anticipation.denominator_fraction(kind)
    if d < 1:
        return math.inf
    c = _ac_center(kind, anticipation, d, use_reference)
    return 2 * Z * math.sqrt(c * (1 - c) / d)


def _literal_widths(kind, anticipation, ns):
    """Vectorised :func:`agresti_coull_width` without a reference cohort."""
    d = ns * anticipation.denominator_fraction(kind)
    x = np.round(anticipation.value(kind) * d)  # half-to-even, like round()
    c = (x + 2.0) / (d + 4.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = 2 * Z * np.sqrt(c * (1 - c) / d)
    return np.where(d < 1, np.inf, w)


AC_BLOCK = 1 << 16


def n_iterative_agresti_coull(kind, anticipation: PerformanceAnticipation, target_ciw: float,
                              use_reference: bool = True) -> SampleSizeResult:
    """Smallest n whose expected Agresti-Coull width is at most ``target_ciw``.

    With a reference cohort the width falls monotonically in n and bisection
    is exact. Rounding the implied counts makes the width a sawtooth, so that
    mode scans every n up to the first power of two that qualifies.
    """
    kind = MeasureKind(kind)
    if kind not in PROPORTION_KINDS:
        raise PreconditionError("Agresti-Coull sizing covers the five proportions, not F1",
                                criterion=kind.value)
    if not 0 < target_ciw < 1:
        raise PreconditionError(f"target width {target_ciw} must lie in (0, 1)", criterion=kind.value)
    _rate(kind.value, anticipation.value(kind))
    monotone = use_reference and anticipation.reference is not None

    def ok(n):
        return agresti_coull_width(kind, anticipation, n, use_reference) <= target_ciw

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > 1 << 40:
            raise PreconditionError("target width unreachable", criterion=kind.value)
    if monotone:
        lo = hi // 2
        # invariant: not ok(lo) (or lo == 0), ok(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        n = hi
    else:
        n = hi
        for start in range(1, hi + 1, AC_BLOCK):
            ns = np.arange(start, min(start + AC_BLOCK, hi + 1), dtype=np.float64)
            hit = np.flatnonzero(_literal_widths(kind, anticipation, ns) <= target_ciw)
            if hit.size:
                n = int(ns[hit[0]])
                break
    width = agresti_coull_width(kind, anticipation, n, use_reference)
    return SampleSizeResult(
        criterion=kind.value,
        n=n,
        events=events_from_n(n, anticipation.prevalence),
        achieved_se=width / (2 * Z),
        achieved_ciw=width,
        threshold=anticipation.threshold,
        value=anticipation.value(kind),
        target=PrecisionTarget.ciw(kind, target_ciw),
        method="agresti_coull",
    )


def ciw_at_n(kind, anticipation: PerformanceAnticipation, n: int,
             method=CIMethod.WALD, use_reference: bool = True) -> MeasureEstimate:
    """Expected 95% interval for ``kind`` in a study of ``n`` participants."""
    kind = MeasureKind(kind)
    method = CIMethod(method)
    if n < 1:
        raise PreconditionError(f"sample size {n} must be >= 1", criterion=kind.value)
    value = anticipation.value(kind)
    if method is CIMethod.WALD or kind is MeasureKind.F1:
        se = measure_se(kind, anticipation, n)
        lo, hi = wald_interval(value, se)
        return MeasureEstimate(kind, value, se, lo, hi, CIMethod.WALD, 2 * Z * se)
    d = n * anticipation.denominator_fraction(kind)
    c = _ac_center(kind, anticipation, d, use_reference)
    se = math.sqrt(c * (1 - c) / d)
    lo, hi = max(0.0, c - Z * se), min(1.0, c + Z * se)
    return MeasureEstimate(kind, c, se, lo, hi, CIMethod.AGRESTI_COULL, 2 * Z * se)


def _result_for(kind, anticipation, target, method):
    if method is CIMethod.AGRESTI_COULL and kind in PROPORTION_KINDS:
        if target.mode is TargetMode.CIW:
            width = target.magnitude
        else:
            width = 2 * Z * target.magnitude
        res = n_iterative_agresti_coull(kind, anticipation, width)
        res.target = target
        return res
    res = n_for(kind, anticipation, target.target_se)
    res.target = target
    return res


def plan_binary(
    anticipation: Union[PerformanceAnticipation, Sequence[PerformanceAnticipation]],
    targets: Iterable[PrecisionTarget],
    riley_inputs: Optional[RileyInputs] = None,
    method=CIMethod.WALD,
) -> SampleSizePlan:
    """Size a binary-outcome validation study against every requested criterion.

    ``anticipation`` may be one record or one per threshold; each measure
    target is evaluated at every threshold.
    """
    if isinstance(anticipation, PerformanceAnticipation):
        anticipations = [anticipation]
    else:
        anticipations = list(anticipation)
    if not anticipations:
        raise PreconditionError("no anticipated performance supplied")
    method = CIMethod(method)
    targets = list(targets)
    phi = anticipations[0].prevalence
    results: List[SampleSizeResult] = []
    measure_kinds = {k.value for k in MeasureKind}
    for t in targets:
        if t.kind not in measure_kinds:
            raise PreconditionError(
                f"{t.kind} targets belong in riley_inputs", criterion=t.kind
            )
    for a in anticipations:
        for t in targets:
            results.append(_result_for(MeasureKind(t.kind), a, t, method))
    if riley_inputs is not None:
        results.extend(riley_results(riley_inputs, phi, anticipations))
    if not results:
        raise PreconditionError("at least one target is required")
    return SampleSizePlan(results=results, prevalence=phi)
