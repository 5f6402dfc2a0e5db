"""Time-to-event extension.

Risk predictions at a horizon from a proportional-hazards model, Kaplan-Meier
cumulative incidence, jackknife pseudo-observations, and a seeded simulation
estimating the expected interval width of each classification measure at
candidate sample sizes.

Random streams in :func:`simulate_ciw`: repetition ``r`` at candidate size
index ``j`` uses child ``j * repetitions + r`` of
``numpy.random.SeedSequence(seed)``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import PreconditionError, SimulationDegeneracyError, UndefinedMeasureError
from .measures import CIMethod, ConfusionMatrix, MeasureKind, estimate

log = logging.getLogger(__name__)


class SurvivalRecord(NamedTuple):
    time: float
    event: int


def as_arrays(records) -> Tuple[np.ndarray, np.ndarray]:
    """Validated time and event arrays from a sequence of
    :class:`SurvivalRecord` or a ``(times, events)`` tuple of arrays."""
    if (isinstance(records, tuple) and len(records) == 2
            and all(isinstance(x, np.ndarray) for x in records)):
        times, events = records
    else:
        records = list(records)
        times = [r[0] for r in records]
        events = [r[1] for r in records]
    return _validate(times, events)


def _validate(times, events):
    t = np.ascontiguousarray(times, dtype=np.float64)
    e = np.ascontiguousarray(events, dtype=np.int64)
    if t.ndim != 1 or t.shape != e.shape:
        raise PreconditionError("times and events must be 1-d and equal length")
    if t.size and (not np.all(np.isfinite(t)) or t.min() <= 0):
        raise PreconditionError("survival times must be finite and positive")
    if np.any((e != 0) & (e != 1)):
        raise PreconditionError("event flags must be 0 (censored) or 1 (event)")
    return t, e


def predicted_risk(s0_t, lp):
    """Risk by the horizon: ``1 - S0(t) ** exp(lp)``."""
    s0 = np.asarray(s0_t, dtype=np.float64)
    if np.any((s0 <= 0) | (s0 > 1)):
        raise PreconditionError("baseline survival must lie in (0, 1]")
    out = -np.expm1(np.exp(lp) * np.log(s0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class KMCurve:
    times: np.ndarray
    survival: np.ndarray

    def at(self, t: float) -> float:
        """Right-continuous step function; S = 1 before the first event."""
        k = np.searchsorted(self.times, t, side="right")
        return 1.0 if k == 0 else float(self.survival[k - 1])


def km_curve(records) -> KMCurve:
    t, e = as_arrays(records)
    u, d = np.unique(t[e == 1], return_counts=True)
    ts = np.sort(t)
    at_risk = t.size - np.searchsorted(ts, u, side="left")
    return KMCurve(u, np.cumprod(1.0 - d / at_risk))


def km_cumulative_incidence(records, horizon: float) -> float:
    """``1 - S_KM(horizon)``; events at a tied time precede censorings."""
    t, e = as_arrays(records)
    if t.size == 0:
        raise PreconditionError("need at least one record")
    order = np.argsort(t, kind="stable")
    s, _ = _kernels.loo_km_survival(t[order], e[order], float(horizon))
    return 1.0 - s


def pseudo_observations(records, horizon: float) -> np.ndarray:
    """Jackknife pseudo-values of the cumulative incidence at ``horizon``.

    O(N log N): one sort, then each leave-one-out estimate is assembled from
    prefix and suffix products of the product-limit factors. Their mean equals
    the Kaplan-Meier cumulative incidence as long as the curve has not reached
    zero by the horizon.
    """
    t, e = as_arrays(records)
    n = t.size
    if n < 2:
        raise PreconditionError("pseudo-observations need at least two records")
    order = np.argsort(t, kind="stable")
    s_full, s_loo = _kernels.loo_km_survival(t[order], e[order], float(horizon))
    out = np.empty(n)
    out[order] = n * (1.0 - s_full) - (n - 1) * (1.0 - np.asarray(s_loo))
    return out


def pseudo_confusion(pseudo, risks, threshold: float) -> ConfusionMatrix:
    """Confusion matrix with pseudo-values as fractional outcomes.

    Individual pseudo-values may fall outside [0, 1]; they are kept, and only
    a negative aggregate cell is clamped to 0.
    """
    w = np.ascontiguousarray(pseudo, dtype=np.float64)
    r = np.ascontiguousarray(risks, dtype=np.float64)
    if w.shape != r.shape:
        raise PreconditionError(f"length mismatch: {w.size} pseudo-values, {r.size} risks")
    tp, fp, fn, tn = _kernels.confusion_sums(r, w, float(threshold))
    cells = {"tp": tp, "fp": fp, "fn": fn, "tn": tn}
    for name, v in cells.items():
        if v < 0:
            log.warning("clamped confusion cell %s=%.6g to 0", name, v)
            cells[name] = 0.0
    return ConfusionMatrix(**cells)


@dataclass(frozen=True)
class Weibull:
    """Weibull with survival ``exp(-(t / scale) ** shape)``."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise PreconditionError("Weibull shape and scale must be positive")

    @classmethod
    def exponential(cls, rate: float) -> "Weibull":
        return cls(1.0, 1.0 / rate)

    def survival(self, t: float) -> float:
        return math.exp(-((t / self.scale) ** self.shape))

    def draw(self, rng, size, lp=None):
        """Times with hazard multiplied by ``exp(lp)`` (proportional hazards)."""
        e = rng.standard_exponential(size)
        if lp is not None:
            e = e * np.exp(-lp)
        return self.scale * e ** (1.0 / self.shape)


@dataclass
class SurvivalScenario:
    horizon: float
    threshold: float
    event: Weibull
    sample_sizes: Sequence[int]
    lp_mean: float = 0.0
    lp_sd: float = 1.0
    censoring: Optional[Weibull] = None
    admin_time: Optional[float] = None
    repetitions: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.horizon > 0:
            raise PreconditionError("horizon must be positive")
        if not 0 < self.threshold < 1:
            raise PreconditionError(f"threshold {self.threshold} outside (0, 1)")
        if self.repetitions < 1:
            raise PreconditionError("repetitions must be >= 1")
        if not self.sample_sizes or min(self.sample_sizes) < 2:
            raise PreconditionError("candidate sample sizes must be >= 2")
        if self.lp_sd < 0:
            raise PreconditionError("lp_sd must be >= 0")
        if self.admin_time is not None and not self.admin_time > 0:
            raise PreconditionError("admin_time must be positive")

    @property
    def baseline_survival(self) -> float:
        return self.event.survival(self.horizon)

    def describe(self) -> dict:
        return {
            "horizon": self.horizon,
            "threshold": self.threshold,
            "event": {"shape": self.event.shape, "scale": self.event.scale},
            "censoring": None if self.censoring is None
            else {"shape": self.censoring.shape, "scale": self.censoring.scale},
            "admin_time": self.admin_time,
            "lp_mean": self.lp_mean,
            "lp_sd": self.lp_sd,
            "sample_sizes": list(self.sample_sizes),
            "repetitions": self.repetitions,
            "seed": self.seed,
        }


@dataclass
class SimulatedStudy:
    """One simulated validation dataset."""

    time: np.ndarray
    event: np.ndarray
    risk: np.ndarray
    true_time: np.ndarray


def simulate_study(scenario: SurvivalScenario, n: int, rng: np.random.Generator) -> SimulatedStudy:
    lp = rng.normal(scenario.lp_mean, scenario.lp_sd, n)
    true_time = scenario.event.draw(rng, n, lp)
    cens = np.full(n, np.inf)
    if scenario.censoring is not None:
        cens = scenario.censoring.draw(rng, n)
    if scenario.admin_time is not None:
        cens = np.minimum(cens, scenario.admin_time)
    time = np.minimum(true_time, cens)
    event = (true_time <= cens).astype(np.int64)
    risk = predicted_risk(scenario.baseline_survival, lp)
    return SimulatedStudy(time, event, np.atleast_1d(risk), true_time)


def evaluate_study(study: SimulatedStudy, horizon: float, threshold: float):
    """Pseudo-value confusion matrix and Wald estimates of all six measures."""
    if not np.any((study.event == 1) & (study.time <= horizon)):
        raise SimulationDegeneracyError("no events observed by the horizon")
    pseudo = pseudo_observations((study.time, study.event), horizon)
    cm = pseudo_confusion(pseudo, study.risk, threshold)
    return cm, [estimate(cm, k, CIMethod.WALD) for k in MeasureKind]


@dataclass
class MeasureSummary:
    mean_estimate: float
    mean_ci_low: float
    mean_ci_high: float
    mean_width: float

    def to_dict(self) -> dict:
        return {
            "mean_estimate": self.mean_estimate,
            "mean_ci_low": self.mean_ci_low,
            "mean_ci_high": self.mean_ci_high,
            "mean_width": self.mean_width,
        }


@dataclass
class SizeSummary:
    n: int
    completed: int
    degenerate: int
    measures: Dict[str, MeasureSummary]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "completed": self.completed,
            "degenerate": self.degenerate,
            "measures": {k: v.to_dict() for k, v in self.measures.items()},
        }


@dataclass
class SurvivalSimulation:
    scenario: SurvivalScenario
    sizes: List[SizeSummary]
    raw: List[dict] = field(default_factory=list)

    def summary(self, n: int) -> SizeSummary:
        for s in self.sizes:
            if s.n == n:
                return s
        raise KeyError(n)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.describe(), "sizes": [s.to_dict() for s in self.sizes]}


def _run_rep(scenario, n, seq):
    rng = np.random.Generator(np.random.PCG64(seq))
    study = simulate_study(scenario, n, rng)
    try:
        _, ests = evaluate_study(study, scenario.horizon, scenario.threshold)
    except (SimulationDegeneracyError, UndefinedMeasureError):
        return None
    return ests


def simulate_ciw(scenario: SurvivalScenario, workers: int = 1, keep_raw: bool = False) -> SurvivalSimulation:
    """Mean estimate and mean 95% interval width of each measure per candidate n."""
    reps = scenario.repetitions
    sizes = list(scenario.sample_sizes)
    seqs = np.random.SeedSequence(scenario.seed).spawn(len(sizes) * reps)
    jobs = [(j, r, n) for j, n in enumerate(sizes) for r in range(reps)]

    def run(job):
        j, r, n = job
        return _run_rep(scenario, n, seqs[j * reps + r])

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            outcomes = list(ex.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    summaries, raw = [], []
    for j, n in enumerate(sizes):
        block = outcomes[j * reps:(j + 1) * reps]
        ok = [b for b in block if b is not None]
        if not ok:
            raise SimulationDegeneracyError(f"all {reps} repetitions at n={n} were degenerate")
        per = {}
        for i, kind in enumerate(MeasureKind):
            est = np.array([[e[i].value, e[i].ci_low, e[i].ci_high, e[i].raw_width] for e in ok])
            # fixed reduction order over repetitions keeps the means reproducible
            per[kind.value] = MeasureSummary(*(math.fsum(col) / len(ok) for col in est.T))
        summaries.append(SizeSummary(n, len(ok), reps - len(ok), per))
        if keep_raw:
            for r, ests in enumerate(block):
                if ests is None:
                    raw.append({"n": n, "rep": r, "measure": "", "estimate": "", "ci_low": "",
                                "ci_high": "", "width": "", "degenerate": 1})
                    continue
                for e in ests:
                    raw.append({"n": n, "rep": r, "measure": e.kind.value, "estimate": e.value,
                                "ci_low": e.ci_low, "ci_high": e.ci_high, "width": e.raw_width,
                                "degenerate": 0})
    return SurvivalSimulation(scenario, summaries, raw)


def builtin_scenario(repetitions: int = 200, seed: int = 2024,
                     sample_sizes: Sequence[int] = (14250, 3600)) -> SurvivalScenario:
    """Recurrence-style example: 3-year horizon, roughly 10% risk, Weibull
    event times, exponential drop-out plus administrative censoring at 5 years."""
    return SurvivalScenario(
        horizon=3.0,
        threshold=0.05,
        event=Weibull(shape=0.9, scale=40.0),
        censoring=Weibull.exponential(0.1),
        admin_time=5.0,
        lp_mean=0.0,
        lp_sd=0.8,
        sample_sizes=tuple(sample_sizes),
        repetitions=repetitions,
        seed=seed,
    )
