"""Result containers shared by the binary solvers and the established criteria."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from .errors import PreconditionError
from .measures import Z, MeasureKind


class TargetMode(str, Enum):
    SE = "se"
    CIW = "ciw"

    def __str__(self) -> str:
        return self.value


# criteria beyond the six classification measures
OE = "oe"
CALIBRATION_SLOPE = "calibration_slope"
CSTATISTIC = "cstatistic"
SNB = "snb"
RILEY_CRITERIA = (OE, CALIBRATION_SLOPE, CSTATISTIC, SNB)
ALL_CRITERIA = tuple(k.value for k in MeasureKind) + RILEY_CRITERIA

CRITERION_LABELS = {
    **{k.value: k.label for k in MeasureKind},
    OE: "O/E",
    CALIBRATION_SLOPE: "Calibration slope",
    CSTATISTIC: "C statistic",
    SNB: "Net benefit",
}


def ciw_to_se(ciw: float) -> float:
    """Standard error implied by a symmetric 95% interval of width ``ciw``."""
    if not ciw > 0:
        raise PreconditionError(f"target interval width {ciw} must be positive")
    if ciw > 1:
        raise PreconditionError(f"target interval width {ciw} exceeds 1")
    return ciw / (2 * Z)


def ceil_n(x: float) -> int:
    # absorb float noise so e.g. 0.25/0.05**2 -> 100, not 101
    return max(1, math.ceil(x - 1e-9 * max(1.0, abs(x))))


def events_from_n(n: int, prevalence: float) -> int:
    return ceil_n(n * prevalence)


@dataclass(frozen=True)
class PrecisionTarget:
    kind: str
    mode: TargetMode
    magnitude: float

    def __post_init__(self):
        kind = self.kind.value if isinstance(self.kind, MeasureKind) else str(self.kind)
        if kind not in ALL_CRITERIA:
            raise PreconditionError(f"unknown criterion {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "mode", TargetMode(self.mode))
        if not self.magnitude > 0:
            raise PreconditionError(f"target {self.magnitude} must be positive", criterion=kind)
        if self.mode is TargetMode.CIW and self.magnitude > 1 and kind != OE:
            raise PreconditionError(f"interval width {self.magnitude} exceeds 1", criterion=kind)

    @classmethod
    def ciw(cls, kind, width):
        return cls(kind, TargetMode.CIW, width)

    @classmethod
    def se(cls, kind, se):
        return cls(kind, TargetMode.SE, se)

    @property
    def target_se(self) -> float:
        """SE on the criterion's analysis scale (log scale for O/E)."""
        if self.mode is TargetMode.SE:
            return self.magnitude
        if self.kind == OE:
            return math.asinh(self.magnitude / 2) / Z
        return ciw_to_se(self.magnitude)

    def column(self) -> str:
        return f"{self.mode.value}={self.magnitude:g}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mode": self.mode.value, "magnitude": self.magnitude}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], TargetMode(d["mode"]), d["magnitude"])


@dataclass
class SampleSizeResult:
    criterion: str
    n: int
    events: Optional[int]
    achieved_se: float
    achieved_ciw: float
    exact: Optional[float] = None
    threshold: Optional[float] = None
    value: Optional[float] = None
    target: Optional[PrecisionTarget] = None
    method: str = "closed_form"

    @property
    def label(self) -> str:
        base = CRITERION_LABELS.get(self.criterion, self.criterion)
        if self.threshold is not None:
            return f"{base} (p={self.threshold:g})"
        return base

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "label": self.label,
            "n": self.n,
            "events": self.events,
            "achieved_se": self.achieved_se,
            "achieved_ciw": self.achieved_ciw,
            "exact": self.exact,
            "threshold": self.threshold,
            "value": self.value,
            "target": None if self.target is None else self.target.to_dict(),
            "method": self.method,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("label", None)
        if d.get("target") is not None:
            d["target"] = PrecisionTarget.from_dict(d["target"])
        return cls(**d)


@dataclass
class SampleSizePlan:
    """Per-criterion results and the overall minimum (the binding criterion)."""

    results: List[SampleSizeResult]
    prevalence: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.results:
            raise PreconditionError("a plan needs at least one criterion")

    @property
    def n(self) -> int:
        return max(r.n for r in self.results)

    @property
    def events(self) -> int:
        return events_from_n(self.n, self.prevalence)

    @property
    def binding(self) -> List[str]:
        top = self.n
        return [r.label for r in self.results if r.n == top]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "events": self.events,
            "binding": self.binding,
            "prevalence": self.prevalence,
            "results": [r.to_dict() for r in self.results],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            results=[SampleSizeResult.from_dict(r) for r in d["results"]],
            prevalence=d["prevalence"],
            provenance=dict(d.get("provenance", {})),
        )
