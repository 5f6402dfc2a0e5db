"""Threshold-based classification measures.

Point estimates, standard errors and confidence intervals for accuracy,
specificity, sensitivity, PPV, NPV and the F1-score, computed either from an
observed confusion matrix or from anticipated (assumed true) values at a
planned sample size.

Cell counts are floats throughout: the survival path fills them with sums of
pseudo-observations, and every formula here is rational in the cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateInputError, PreconditionError, UndefinedMeasureError

Z = 1.96


class MeasureKind(str, Enum):
    ACCURACY = "accuracy"
    SPECIFICITY = "specificity"
    SENSITIVITY = "sensitivity"
    PPV = "ppv"
    NPV = "npv"
    F1 = "f1"

    @property
    def label(self) -> str:
        return _LABELS[self]

    def __str__(self) -> str:
        return self.value


_LABELS = {
    MeasureKind.ACCURACY: "Accuracy",
    MeasureKind.SPECIFICITY: "Specificity",
    MeasureKind.SENSITIVITY: "Sensitivity",
    MeasureKind.PPV: "PPV",
    MeasureKind.NPV: "NPV",
    MeasureKind.F1: "F1-score",
}

PROPORTION_KINDS = (
    MeasureKind.ACCURACY,
    MeasureKind.SPECIFICITY,
    MeasureKind.SENSITIVITY,
    MeasureKind.PPV,
    MeasureKind.NPV,
)


class CIMethod(str, Enum):
    WALD = "wald"
    AGRESTI_COULL = "agresti_coull"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: float
    fp: float
    tn: float
    fn: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise PreconditionError(f"confusion cell {f.name}={v!r} must be finite and >= 0")

    @property
    def n(self) -> float:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def events(self) -> float:
        return self.tp + self.fn

    @property
    def non_events(self) -> float:
        return self.tn + self.fp

    @property
    def prevalence(self) -> float:
        n = self.n
        if n <= 0:
            raise PreconditionError("empty confusion matrix")
        return self.events / n

    def numerator(self, kind: MeasureKind) -> float:
        return _numerator(self, MeasureKind(kind))

    def denominator(self, kind: MeasureKind) -> float:
        return _denominator(self, MeasureKind(kind))


_DENOM_CELLS = {
    MeasureKind.ACCURACY: ("tp", "fp", "tn", "fn"),
    MeasureKind.SPECIFICITY: ("tn", "fp"),
    MeasureKind.SENSITIVITY: ("tp", "fn"),
    MeasureKind.PPV: ("tp", "fp"),
    MeasureKind.NPV: ("tn", "fn"),
    MeasureKind.F1: ("tp", "fp", "fn"),
}


def _numerator(cm, kind):
    if kind is MeasureKind.ACCURACY:
        return cm.tp + cm.tn
    if kind is MeasureKind.SPECIFICITY or kind is MeasureKind.NPV:
        return cm.tn
    if kind is MeasureKind.F1:
        return 2.0 * cm.tp
    return cm.tp


def _denominator(cm, kind):
    if kind is MeasureKind.F1:
        return 2.0 * cm.tp + cm.fp + cm.fn
    return sum(getattr(cm, c) for c in _DENOM_CELLS[kind])


def build_confusion(predicted_probs, outcomes, threshold: float) -> ConfusionMatrix:
    """Classify ``prob > threshold`` as positive; ties go negative."""
    probs = np.ascontiguousarray(predicted_probs, dtype=np.float64)
    y = np.ascontiguousarray(outcomes, dtype=np.float64)
    if probs.ndim != 1 or y.ndim != 1:
        raise PreconditionError("predictions and outcomes must be one-dimensional")
    if probs.shape[0] != y.shape[0]:
        raise PreconditionError(
            f"length mismatch: {probs.shape[0]} predictions, {y.shape[0]} outcomes"
        )
    if probs.shape[0] == 0:
        raise PreconditionError("no predictions supplied")
    if not 0.0 < threshold < 1.0:
        raise PreconditionError(f"threshold {threshold} outside (0, 1)")
    if np.any(~np.isfinite(probs)) or probs.min() < 0.0 or probs.max() > 1.0:
        raise PreconditionError("predicted probabilities must lie in [0, 1]")
    if np.any((y != 0.0) & (y != 1.0)):
        raise PreconditionError("outcomes must be 0 or 1")
    tp, fp, fn, tn = _kernels.confusion_sums(probs, y, float(threshold))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def measure_value(cm: ConfusionMatrix, kind: MeasureKind) -> float:
    kind = MeasureKind(kind)
    den = _denominator(cm, kind)
    if den <= 0:
        raise UndefinedMeasureError(kind, _DENOM_CELLS[kind])
    return _numerator(cm, kind) / den


def cov_precision_recall(P, R, specificity, prevalence, n) -> float:
    """Covariance of precision and recall from rates at sample size ``n``."""
    _check_prevalence(prevalence)
    if n < 1:
        raise PreconditionError(f"sample size {n} must be >= 1")
    pq = P * (1.0 - P)
    return (pq * (1.0 - R) / prevalence + pq * specificity / (1.0 - prevalence)) / n


def cov_precision_recall_counts(cm: ConfusionMatrix) -> float:
    """Covariance of precision and recall from confusion cells."""
    pos = cm.tp + cm.fp
    ev = cm.tp + cm.fn
    neg = cm.tn + cm.fp
    if pos <= 0 or ev <= 0 or neg <= 0:
        raise UndefinedMeasureError(MeasureKind.F1, ("tp", "fp", "fn", "tn"))
    return (
        cm.fp * cm.tp * cm.fn / (pos**2 * ev**2)
        + cm.fp * cm.tp * cm.tn / (pos**2 * neg**2)
    )


def f1_se(P, R, se_p, se_r, cov) -> float:
    """Delta-method SE of the F1-score given SEs of precision and recall."""
    num = R**4 * se_p**2 + 2.0 * P**2 * R**2 * cov + P**4 * se_r**2
    return math.sqrt(4.0 * num / (P + R) ** 4)


def _check_prevalence(phi):
    if not 0.0 < phi < 1.0:
        raise DegenerateInputError(f"prevalence {phi} must lie strictly between 0 and 1")


@dataclass
class PerformanceAnticipation:
    """Assumed true performance at one threshold.

    Any of ``accuracy``, ``ppv``, ``npv`` and ``f1`` left as ``None`` is
    derived from prevalence, sensitivity and specificity on request.
    ``reference`` optionally holds the large-cohort confusion matrix the
    values came from.
    """

    prevalence: float
    threshold: Optional[float] = None
    accuracy: Optional[float] = None
    sensitivity: Optional[float] = None
    specificity: Optional[float] = None
    ppv: Optional[float] = None
    npv: Optional[float] = None
    f1: Optional[float] = None
    reference: Optional[ConfusionMatrix] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _check_prevalence(self.prevalence)
        if self.threshold is not None and not 0.0 < self.threshold < 1.0:
            raise PreconditionError(f"threshold {self.threshold} outside (0, 1)")
        for kind in MeasureKind:
            v = getattr(self, kind.value)
            if v is not None and not 0.0 < v < 1.0:
                raise DegenerateInputError(
                    f"anticipated {kind.label} = {v} must lie strictly between 0 and 1",
                    criterion=kind.value,
                )
        if (
            self.accuracy is not None
            and self.sensitivity is not None
            and self.specificity is not None
        ):
            implied = self.sensitivity * self.prevalence + self.specificity * (1 - self.prevalence)
            if abs(implied - self.accuracy) > 0.02:
                raise PreconditionError(
                    f"accuracy {self.accuracy} inconsistent with sensitivity, specificity "
                    f"and prevalence (implied {implied:.4f})",
                    criterion="accuracy",
                )

    @classmethod
    def from_confusion(cls, cm: ConfusionMatrix, threshold=None) -> "PerformanceAnticipation":
        vals = {k.value: measure_value(cm, k) for k in MeasureKind}
        return cls(prevalence=cm.prevalence, threshold=threshold, reference=cm, **vals)

    def value(self, kind: MeasureKind) -> float:
        kind = MeasureKind(kind)
        v = getattr(self, kind.value)
        if v is not None:
            return v
        phi = self.prevalence
        if kind is MeasureKind.F1:
            p, r = self.value(MeasureKind.PPV), self.require(MeasureKind.SENSITIVITY)
            return 2 * p * r / (p + r)
        sens = self.require(MeasureKind.SENSITIVITY)
        spec = self.require(MeasureKind.SPECIFICITY)
        if kind is MeasureKind.ACCURACY:
            return sens * phi + spec * (1 - phi)
        if kind is MeasureKind.PPV:
            return sens * phi / (sens * phi + (1 - spec) * (1 - phi))
        return spec * (1 - phi) / (spec * (1 - phi) + (1 - sens) * phi)

    def to_dict(self) -> dict:
        """All six values, derived ones included."""
        out = {"prevalence": self.prevalence, "threshold": self.threshold}
        out.update({k.value: self.value(k) for k in MeasureKind})
        return out

    def require(self, kind: MeasureKind) -> float:
        v = getattr(self, MeasureKind(kind).value)
        if v is None:
            raise PreconditionError(f"anticipated {MeasureKind(kind).label} is required", criterion=str(kind))
        return v

    def denominator_fraction(self, kind: MeasureKind) -> float:
        """Expected share of the sample in the measure's denominator."""
        kind = MeasureKind(kind)
        phi = self.prevalence
        if kind is MeasureKind.ACCURACY:
            return 1.0
        if kind is MeasureKind.SPECIFICITY:
            return 1.0 - phi
        if kind is MeasureKind.SENSITIVITY:
            return phi
        sens = self.require(MeasureKind.SENSITIVITY)
        if kind is MeasureKind.PPV:
            return sens * phi / self.value(MeasureKind.PPV)
        if kind is MeasureKind.NPV:
            spec = self.require(MeasureKind.SPECIFICITY)
            return spec * (1 - phi) + phi * (1 - sens)
        raise PreconditionError("F1 has no single proportion denominator", criterion="f1")


def measure_se(kind: MeasureKind, anticipation: PerformanceAnticipation, n) -> float:
    """Wald SE of a measure at sample size ``n`` under the anticipated values."""
    kind = MeasureKind(kind)
    if n < 1:
        raise PreconditionError(f"sample size {n} must be >= 1", criterion=kind.value)
    a = anticipation
    if kind is MeasureKind.F1:
        P = a.value(MeasureKind.PPV)
        R = a.require(MeasureKind.SENSITIVITY)
        spec = a.require(MeasureKind.SPECIFICITY)
        se_p = measure_se(MeasureKind.PPV, a, n)
        se_r = measure_se(MeasureKind.SENSITIVITY, a, n)
        cov = cov_precision_recall(P, R, spec, a.prevalence, n)
        return f1_se(P, R, se_p, se_r, cov)
    v = a.value(kind)
    return math.sqrt(v * (1 - v) / (n * a.denominator_fraction(kind)))


def measure_se_counts(cm: ConfusionMatrix, kind: MeasureKind) -> float:
    """Wald SE from observed (possibly fractional) cells."""
    kind = MeasureKind(kind)
    if kind is MeasureKind.F1:
        P = measure_value(cm, MeasureKind.PPV)
        R = measure_value(cm, MeasureKind.SENSITIVITY)
        se_p = measure_se_counts(cm, MeasureKind.PPV)
        se_r = measure_se_counts(cm, MeasureKind.SENSITIVITY)
        return f1_se(P, R, se_p, se_r, cov_precision_recall_counts(cm))
    v = measure_value(cm, kind)
    return math.sqrt(max(v * (1 - v), 0.0) / _denominator(cm, kind))


def wald_interval(value, se):
    if se < 0:
        raise PreconditionError(f"negative standard error {se}")
    return max(0.0, value - Z * se), min(1.0, value + Z * se)


def agresti_coull_center(x, n):
    return (x + 2.0) / (n + 4.0)


def agresti_coull_interval(x, n):
    """Add two successes and two failures; the spread divides by ``n``."""
    if n < 1:
        raise PreconditionError(f"denominator {n} must be >= 1")
    if x < 0 or x > n:
        raise PreconditionError(f"numerator {x} outside [0, {n}]")
    c = agresti_coull_center(x, n)
    half = Z * math.sqrt(c * (1 - c) / n)
    return max(0.0, c - half), min(1.0, c + half)


def confidence_interval(value=None, se=None, method=CIMethod.WALD, x=None, n=None):
    """Two-sided 95% interval, clamped to [0, 1].

    Wald needs ``value`` and ``se``; Agresti-Coull needs the proportion's
    numerator ``x`` and denominator ``n``.
    """
    method = CIMethod(method)
    if method is CIMethod.WALD:
        if value is None or se is None:
            raise PreconditionError("Wald interval needs value and se")
        return wald_interval(value, se)
    if x is None or n is None:
        raise PreconditionError("Agresti-Coull interval needs counts x and n")
    return agresti_coull_interval(x, n)


@dataclass(frozen=True)
class MeasureEstimate:
    kind: MeasureKind
    value: float
    se: float
    ci_low: float
    ci_high: float
    ci_method: CIMethod
    # unclamped width, kept for width targeting
    raw_width: float

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "ci_method": self.ci_method.value,
            "raw_width": self.raw_width,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(MeasureKind(d["kind"]), d["value"], d["se"], d["ci_low"], d["ci_high"],
                   CIMethod(d["ci_method"]), d["raw_width"])


def estimate(cm: ConfusionMatrix, kind: MeasureKind, method=CIMethod.WALD) -> MeasureEstimate:
    """Point estimate, SE and 95% CI for one measure of an observed matrix."""
    kind = MeasureKind(kind)
    method = CIMethod(method)
    value = measure_value(cm, kind)
    if method is CIMethod.WALD:
        se = measure_se_counts(cm, kind)
        lo, hi = wald_interval(value, se)
        return MeasureEstimate(kind, value, se, lo, hi, method, 2 * Z * se)
    if kind is MeasureKind.F1:
        raise PreconditionError("Agresti-Coull applies to proportions, not F1", criterion="f1")
    x, n = _numerator(cm, kind), _denominator(cm, kind)
    c = agresti_coull_center(x, n)
    se = math.sqrt(c * (1 - c) / n)
    lo, hi = agresti_coull_interval(x, n)
    return MeasureEstimate(kind, value, se, lo, hi, method, 2 * Z * se)


def estimate_all(cm: ConfusionMatrix, method=CIMethod.WALD, kinds: Sequence[MeasureKind] = tuple(MeasureKind)):
    return [estimate(cm, k, method) for k in kinds]
