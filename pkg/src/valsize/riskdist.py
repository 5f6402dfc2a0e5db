"""Assumed predicted-risk distributions and perfectly calibrated cohorts.

Random streams: a cohort of size ``m`` is drawn in fixed chunks of
``CHUNK`` observations; chunk ``i`` uses child ``i`` of
``numpy.random.SeedSequence(seed)`` with the PCG64 generator. The chunk size
never depends on the number of workers, so any parallel schedule yields the
same cohort.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .errors import PreconditionError
from .measures import ConfusionMatrix, PerformanceAnticipation, build_confusion

CHUNK = 1 << 17
DEFAULT_COHORT_SIZE = 1_000_000
DEFAULT_SEED = 0


@dataclass(frozen=True)
class BetaDist:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise PreconditionError(f"Beta parameters must be positive, got ({self.a}, {self.b})")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def variance(self) -> float:
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.beta(self.a, self.b, size)

    def describe(self) -> dict:
        return {"beta": [self.a, self.b]}


@dataclass(frozen=True)
class Empirical:
    """Resample (with replacement) from a list of predicted probabilities."""

    probs: tuple

    def __init__(self, probs: Sequence[float]):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise PreconditionError("empirical distribution needs at least one probability")
        if np.any(~np.isfinite(arr)) or arr.min() <= 0.0 or arr.max() >= 1.0:
            raise PreconditionError("empirical probabilities must lie strictly inside (0, 1)")
        object.__setattr__(self, "probs", tuple(arr.tolist()))

    @property
    def mean(self) -> float:
        return float(np.mean(self.probs))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        arr = np.asarray(self.probs)
        return arr[rng.integers(0, arr.size, size)]

    def describe(self) -> dict:
        return {"empirical": len(self.probs)}


RiskDistribution = Union[BetaDist, Empirical]


def load_empirical(path) -> Empirical:
    """One probability per line; blank lines and ``#`` comments ignored."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise PreconditionError(f"{path}:{lineno}: not a number: {line!r}") from None
    return Empirical(values)


@dataclass
class SimulatedCohort:
    probs: np.ndarray
    outcomes: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    @property
    def prevalence(self) -> float:
        return float(self.outcomes.mean())


def _chunk(dist, seq, size):
    rng = np.random.Generator(np.random.PCG64(seq))
    p = dist.draw(rng, size)
    y = (rng.random(size) < p).astype(np.int8)
    return p, y


def sample_cohort(dist: RiskDistribution, m: int = DEFAULT_COHORT_SIZE, seed: int = DEFAULT_SEED,
                  workers: int = 1) -> SimulatedCohort:
    """Draw ``m`` predicted risks and Bernoulli outcomes with those risks."""
    if m < 1:
        raise PreconditionError(f"cohort size {m} must be >= 1")
    sizes = [CHUNK] * (m // CHUNK)
    if m % CHUNK:
        sizes.append(m % CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _chunk(dist, *a), zip(seqs, sizes)))
    else:
        parts = [_chunk(dist, s, n) for s, n in zip(seqs, sizes)]
    probs = np.concatenate([p for p, _ in parts])
    outcomes = np.concatenate([y for _, y in parts])
    return SimulatedCohort(probs, outcomes, seed)


def anticipated_measures(cohort: SimulatedCohort, threshold: float,
                         expected: bool = True) -> PerformanceAnticipation:
    """Unrounded 'true' performance of a calibrated model at ``threshold``.

    With ``expected=True`` each individual contributes its risk as a
    fractional outcome (the conditional expectation of the Bernoulli draw).
    Both versions estimate the same population values; the expected-count
    version removes outcome noise, which matters for measures with a small
    denominator such as NPV at low thresholds.
    """
    if not 0.0 < threshold < 1.0:
        raise PreconditionError(f"threshold {threshold} outside (0, 1)")
    if expected:
        p = np.ascontiguousarray(cohort.probs, dtype=np.float64)
        tp, fp, fn, tn = _kernels.confusion_sums(p, p, float(threshold))
        cm = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)
    else:
        cm = build_confusion(cohort.probs, cohort.outcomes, threshold)
    return PerformanceAnticipation.from_confusion(cm, threshold)


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise PreconditionError("logit needs probabilities strictly inside (0, 1)")
    return np.log(p) - np.log1p(-p)


def expit(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def lp_samples(cohort: Union[SimulatedCohort, np.ndarray]) -> np.ndarray:
    """Linear predictor (log-odds) of every predicted risk."""
    probs = cohort.probs if isinstance(cohort, SimulatedCohort) else cohort
    return logit(probs)
