"""Established criteria: O/E ratio, calibration slope, c-statistic and
standardised net benefit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateInputError, PreconditionError
from .measures import Z, MeasureKind, PerformanceAnticipation
from .results import (
    CALIBRATION_SLOPE,
    CSTATISTIC,
    OE,
    SNB,
    PrecisionTarget,
    SampleSizeResult,
    ceil_n,
    events_from_n,
)


def _check_phi(phi, criterion):
    if not 0.0 < phi < 1.0:
        raise DegenerateInputError(
            f"prevalence {phi} must lie strictly between 0 and 1", criterion=criterion
        )


def _check_se(se, criterion):
    if not se > 0:
        raise PreconditionError(f"target SE {se} must be positive", criterion=criterion)


def oe_ciw_to_se(ciw: float) -> float:
    """SE of ln(O/E) giving an O/E interval of width ``ciw`` around 1.

    Solves exp(Z*se) - exp(-Z*se) = ciw.
    """
    if not ciw > 0:
        raise PreconditionError(f"O/E interval width {ciw} must be positive", criterion=OE)
    return math.asinh(ciw / 2) / Z


def n_oe(prevalence: float, se: Optional[float] = None, ciw: Optional[float] = None) -> SampleSizeResult:
    _check_phi(prevalence, OE)
    if (se is None) == (ciw is None):
        raise PreconditionError("give exactly one of se or ciw", criterion=OE)
    target = PrecisionTarget.se(OE, se) if se is not None else PrecisionTarget.ciw(OE, ciw)
    se = target.target_se
    _check_se(se, OE)
    exact = (1 - prevalence) / (prevalence * se**2)
    n = ceil_n(exact)
    achieved = math.sqrt((1 - prevalence) / (prevalence * n))
    return SampleSizeResult(
        OE, n, events_from_n(n, prevalence), achieved, 2 * math.sinh(Z * achieved),
        exact=exact, value=1.0, target=target,
    )


@dataclass(frozen=True)
class CalibrationAssumption:
    intercept: float = 0.0
    slope: float = 1.0


@dataclass(frozen=True)
class FisherInfo:
    i_alpha: float
    i_ab: float
    i_beta: float

    @property
    def determinant(self) -> float:
        return self.i_alpha * self.i_beta - self.i_ab**2


def fisher_info(lp_samples, assumption: CalibrationAssumption = CalibrationAssumption()) -> FisherInfo:
    """Per-observation Fisher information of (intercept, slope) in a logistic
    recalibration model, averaged over a sample of linear predictors."""
    lp = np.ascontiguousarray(lp_samples, dtype=np.float64)
    if lp.ndim != 1 or lp.shape[0] < 2:
        raise PreconditionError("need at least two linear-predictor values", criterion=CALIBRATION_SLOPE)
    if not np.all(np.isfinite(lp)):
        raise PreconditionError("linear predictor values must be finite", criterion=CALIBRATION_SLOPE)
    sa, sb, sc = _kernels.fisher_sums(lp, float(assumption.intercept), float(assumption.slope))
    m = lp.shape[0]
    return FisherInfo(sa / m, sb / m, sc / m)


def n_calibration_slope(info: FisherInfo, target_se: float, prevalence: Optional[float] = None,
                        target: Optional[PrecisionTarget] = None) -> SampleSizeResult:
    _check_se(target_se, CALIBRATION_SLOPE)
    det = info.determinant
    if not (info.i_alpha > 0 and det > 0):
        raise PreconditionError(
            "degenerate linear predictor: Fisher information matrix is singular",
            criterion=CALIBRATION_SLOPE,
        )
    exact = info.i_alpha / (target_se**2 * det)
    n = ceil_n(exact)
    achieved = math.sqrt(info.i_alpha / (n * det))
    events = None if prevalence is None else events_from_n(n, prevalence)
    return SampleSizeResult(
        CALIBRATION_SLOPE, n, events, achieved, 2 * Z * achieved, exact=exact, value=1.0,
        target=target or PrecisionTarget.se(CALIBRATION_SLOPE, target_se),
    )


def se_cstat(c: float, n: float, prevalence: float) -> float:
    """Distribution-free SE of the c-statistic at total sample size ``n``."""
    if not 0.5 < c < 1.0:
        raise PreconditionError(f"c-statistic {c} must lie in (0.5, 1)", criterion=CSTATISTIC)
    _check_phi(prevalence, CSTATISTIC)
    half = n / 2 - 1
    var = c * (1 - c) * (1 + half * (1 - c) / (2 - c) + half * c / (1 + c))
    return math.sqrt(var / (n**2 * prevalence * (1 - prevalence)))


CSTAT_SEARCH = (10, 10_000_000)


def n_cstat(c: float, prevalence: float, target_se: float,
            target: Optional[PrecisionTarget] = None) -> SampleSizeResult:
    _check_se(target_se, CSTATISTIC)
    lo, hi = CSTAT_SEARCH
    if se_cstat(c, hi, prevalence) > target_se:
        raise PreconditionError(
            f"target SE {target_se} unreachable below n={hi}", criterion=CSTATISTIC
        )
    if se_cstat(c, lo, prevalence) <= target_se:
        n = lo
    else:
        # invariant: se(lo) > target >= se(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if se_cstat(c, mid, prevalence) <= target_se:
                hi = mid
            else:
                lo = mid
        n = hi
    achieved = se_cstat(c, n, prevalence)
    return SampleSizeResult(
        CSTATISTIC, n, events_from_n(n, prevalence), achieved, 2 * Z * achieved,
        value=c, target=target or PrecisionTarget.se(CSTATISTIC, target_se), method="bisection",
    )


@dataclass(frozen=True)
class SNBInputs:
    threshold: float
    prevalence: float
    sensitivity: float
    specificity: float

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise PreconditionError(f"threshold {self.threshold} outside (0, 1)", criterion=SNB)
        _check_phi(self.prevalence, SNB)
        for name in ("sensitivity", "specificity"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise DegenerateInputError(f"{name} {v} must lie in (0, 1)", criterion=SNB)

    @property
    def w(self) -> float:
        phi, p = self.prevalence, self.threshold
        return (1 - phi) / phi * p / (1 - p)

    @property
    def snb(self) -> float:
        return self.sensitivity - self.w * (1 - self.specificity)

    def variance_unit(self) -> float:
        """Variance of sNB times n."""
        phi, sens, spec, w = self.prevalence, self.sensitivity, self.specificity, self.w
        return (
            sens * (1 - sens) / phi
            + w**2 * spec * (1 - spec) / (1 - phi)
            + w**2 * (1 - spec) ** 2 / (phi * (1 - phi))
        )


def n_snb(inputs: SNBInputs, target_se: float, target: Optional[PrecisionTarget] = None) -> SampleSizeResult:
    _check_se(target_se, SNB)
    v = inputs.variance_unit()
    exact = v / target_se**2
    n = ceil_n(exact)
    achieved = math.sqrt(v / n)
    return SampleSizeResult(
        SNB, n, events_from_n(n, inputs.prevalence), achieved, 2 * Z * achieved,
        exact=exact, threshold=inputs.threshold, value=inputs.snb,
        target=target or PrecisionTarget.se(SNB, target_se),
    )


@dataclass
class RileyInputs:
    """Inputs for the established criteria. Leave a target as ``None`` to skip it.

    ``fisher`` is required when a calibration-slope target is set; sNB is
    evaluated at every threshold of the anticipations passed alongside.
    """

    cstatistic: Optional[float] = None
    fisher: Optional[FisherInfo] = None
    oe: Optional[PrecisionTarget] = None
    calibration_slope: Optional[PrecisionTarget] = None
    cstat: Optional[PrecisionTarget] = None
    snb: Optional[PrecisionTarget] = None
    assumption: CalibrationAssumption = field(default_factory=CalibrationAssumption)


def riley_results(inputs: RileyInputs, prevalence: float,
                  anticipations: Sequence[PerformanceAnticipation] = ()) -> List[SampleSizeResult]:
    out = []
    if inputs.oe is not None:
        out.append(n_oe(prevalence, se=inputs.oe.target_se))
        out[-1].target = inputs.oe
    if inputs.calibration_slope is not None:
        if inputs.fisher is None:
            raise PreconditionError("calibration slope needs a linear-predictor distribution",
                                    criterion=CALIBRATION_SLOPE)
        out.append(n_calibration_slope(inputs.fisher, inputs.calibration_slope.target_se,
                                       prevalence, target=inputs.calibration_slope))
    if inputs.cstat is not None:
        if inputs.cstatistic is None:
            raise PreconditionError("c-statistic target set without an anticipated c-statistic",
                                    criterion=CSTATISTIC)
        out.append(n_cstat(inputs.cstatistic, prevalence, inputs.cstat.target_se, target=inputs.cstat))
    if inputs.snb is not None:
        for a in anticipations:
            if a.threshold is None:
                raise PreconditionError("net benefit needs a threshold", criterion=SNB)
            snb_in = SNBInputs(a.threshold, a.prevalence,
                               a.require(MeasureKind.SENSITIVITY), a.require(MeasureKind.SPECIFICITY))
            out.append(n_snb(snb_in, inputs.snb.target_se, target=inputs.snb))
    return out
