"""Minimum sample sizes for external validation of risk prediction models."""
from ._kernels import BACKEND
from .errors import (
    ConfigError,
    DegenerateInputError,
    InconsistentTargetsError,
    PreconditionError,
    SimulationDegeneracyError,
    UndefinedMeasureError,
    ValsizeError,
)
from .measures import (
    CIMethod,
    ConfusionMatrix,
    MeasureEstimate,
    MeasureKind,
    PerformanceAnticipation,
    build_confusion,
    confidence_interval,
    cov_precision_recall,
    estimate,
    measure_se,
    measure_value,
)
from .results import PrecisionTarget, SampleSizePlan, SampleSizeResult, TargetMode
from .samplesize import ciw_at_n, ciw_to_se, n_iterative_agresti_coull, plan_binary

__version__ = "0.1.0"
