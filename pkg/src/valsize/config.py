"""Scenario documents: JSON validated against ``schema/scenario.schema.json``."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Optional, Tuple, Union

from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .errors import ConfigError, PreconditionError
from .measures import CIMethod, MeasureKind, PerformanceAnticipation
from .results import CALIBRATION_SLOPE, CSTATISTIC, OE, SNB, PrecisionTarget, TargetMode
from .riley import CalibrationAssumption
from .riskdist import DEFAULT_COHORT_SIZE, DEFAULT_SEED, BetaDist, Empirical, RiskDistribution, load_empirical
from .survival import SurvivalScenario, Weibull

SEED_ENV = "VALSIZE_SEED"
MODES = ("binary", "binary_inverse", "survival")
FORMATS = ("text", "json", "csv")


def load_schema() -> dict:
    text = resources.files("valsize").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


_validator = None


def _get_validator():
    global _validator
    if _validator is None:
        _validator = Draft202012Validator(load_schema())
    return _validator


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate(raw: dict) -> None:
    """Raise :class:`ConfigError` naming the offending field, if any."""
    err = best_match(_get_validator().iter_errors(raw))
    if err is not None:
        raise ConfigError(err.message, _path(err))


@dataclass
class RileySpec:
    cstatistic: Optional[float] = None
    oe: Optional[PrecisionTarget] = None
    calibration_slope: Optional[PrecisionTarget] = None
    cstat: Optional[PrecisionTarget] = None
    snb: Optional[PrecisionTarget] = None
    assumption: CalibrationAssumption = field(default_factory=CalibrationAssumption)

    def targets(self) -> List[PrecisionTarget]:
        return [t for t in (self.oe, self.calibration_slope, self.cstat, self.snb) if t is not None]


@dataclass
class ScenarioConfig:
    mode: str
    risk_distribution: Optional[RiskDistribution] = None
    anticipated: List[PerformanceAnticipation] = field(default_factory=list)
    thresholds: Tuple[float, ...] = ()
    targets: List[PrecisionTarget] = field(default_factory=list)
    riley: Optional[RileySpec] = None
    interval_method: CIMethod = CIMethod.WALD
    seed: Optional[int] = None
    cohort_size: int = DEFAULT_COHORT_SIZE
    n: Optional[int] = None
    format: str = "text"
    survival: Optional[SurvivalScenario] = None


def _targets(raw) -> List[PrecisionTarget]:
    out = []
    for i, t in enumerate(raw):
        mode, mag = (TargetMode.CIW, t["ciw"]) if "ciw" in t else (TargetMode.SE, t["se"])
        kinds = list(MeasureKind) if t["measure"] == "all" else [MeasureKind(t["measure"])]
        for k in kinds:
            try:
                out.append(PrecisionTarget(k, mode, mag))
            except PreconditionError as e:
                raise ConfigError(str(e), f"targets/{i}") from None
    return out


def _riley(raw) -> RileySpec:
    def pick(criterion, key):
        if f"{key}_ciw" in raw and f"{key}_se" in raw:
            raise ConfigError(f"give {key}_ciw or {key}_se, not both", f"riley/{key}_ciw")
        if f"{key}_ciw" in raw:
            return PrecisionTarget.ciw(criterion, raw[f"{key}_ciw"])
        if f"{key}_se" in raw:
            return PrecisionTarget.se(criterion, raw[f"{key}_se"])
        return None

    spec = RileySpec(
        cstatistic=raw.get("cstatistic"),
        oe=pick(OE, "oe"),
        calibration_slope=pick(CALIBRATION_SLOPE, "slope"),
        cstat=pick(CSTATISTIC, "cstat"),
        snb=pick(SNB, "snb"),
        assumption=CalibrationAssumption(raw.get("intercept", 0.0), raw.get("slope", 1.0)),
    )
    if spec.cstat is not None and spec.cstatistic is None:
        raise ConfigError("a c-statistic target needs 'cstatistic'", "riley/cstatistic")
    return spec


def _time_dist(raw) -> Weibull:
    if raw["dist"] == "exponential":
        return Weibull.exponential(raw["rate"])
    return Weibull(raw["shape"], raw["scale"])


def _risk_distribution(raw, base_dir) -> RiskDistribution:
    if "beta" in raw:
        return BetaDist(*raw["beta"])
    if "empirical" in raw:
        return Empirical(raw["empirical"])
    path = Path(raw["empirical_file"])
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    if not path.is_file():
        raise ConfigError(f"no such file: {path}", "risk_distribution/empirical_file")
    return load_empirical(path)


def parse_config(raw: dict, base_dir=None) -> ScenarioConfig:
    """Validate ``raw`` and build typed inputs. Relative file paths resolve
    against ``base_dir``."""
    validate(raw)
    cfg = ScenarioConfig(mode=raw["mode"])
    cfg.interval_method = CIMethod(raw.get("interval_method", "wald"))
    cfg.seed = raw.get("seed")
    cfg.cohort_size = raw.get("cohort_size", DEFAULT_COHORT_SIZE)
    cfg.n = raw.get("n")
    cfg.format = raw.get("format", "text")
    cfg.targets = _targets(raw.get("targets", []))
    if "riley" in raw:
        cfg.riley = _riley(raw["riley"])

    if cfg.mode == "survival":
        s = raw["survival"]
        lp = s.get("lp", {})
        try:
            cfg.survival = SurvivalScenario(
                horizon=s["horizon"],
                threshold=s["threshold"],
                event=_time_dist(s["event"]),
                censoring=_time_dist(s["censoring"]) if "censoring" in s else None,
                admin_time=s.get("admin_time"),
                lp_mean=lp.get("mean", 0.0),
                lp_sd=lp.get("sd", 1.0),
                sample_sizes=tuple(s["sample_sizes"]),
                repetitions=s.get("repetitions", 100),
                seed=DEFAULT_SEED if cfg.seed is None else cfg.seed,
            )
        except PreconditionError as e:
            raise ConfigError(str(e), "survival") from None
        return cfg

    if "anticipated" in raw:
        for i, a in enumerate(raw["anticipated"]):
            try:
                cfg.anticipated.append(PerformanceAnticipation(**a))
            except PreconditionError as e:
                raise ConfigError(str(e), f"anticipated/{i}") from None
        cfg.thresholds = tuple(a.threshold for a in cfg.anticipated)
        if cfg.riley and cfg.riley.calibration_slope is not None:
            raise ConfigError("calibration slope needs a risk_distribution", "riley/slope_ciw")
    else:
        try:
            cfg.risk_distribution = _risk_distribution(raw["risk_distribution"], base_dir)
        except PreconditionError as e:
            raise ConfigError(str(e), "risk_distribution") from None
        cfg.thresholds = tuple(raw["thresholds"])

    if cfg.mode == "binary" and not cfg.targets and not (cfg.riley and cfg.riley.targets()):
        raise ConfigError("binary mode needs at least one target", "targets")
    return cfg


def load_config(source: Union[str, os.PathLike, dict]) -> ScenarioConfig:
    """Parse a scenario from a JSON file path or an already-decoded dict."""
    if isinstance(source, dict):
        return parse_config(source)
    path = Path(source)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", "<root>")
    return parse_config(raw, base_dir=path.parent)


def resolve_seed(flag: Optional[int], configured: Optional[int]) -> int:
    """``--seed`` wins, then the config document, then ``VALSIZE_SEED``."""
    if flag is not None:
        return flag
    if configured is not None:
        return configured
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
        if seed < 0:
            raise ConfigError(f"{SEED_ENV} must be >= 0")
        return seed
    return DEFAULT_SEED
