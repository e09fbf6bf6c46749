"""Online sparse tracking with iterative soft thresholding for the dynamic Elastic net."""
__version__ = "0.1.0"

from . import kernels
from .elastic_net import (
    BatchSolveReport,
    ElasticNetParams,
    MeasurementRound,
    batch_solve,
    cost,
    ist_step,
    optimality_residual,
    surrogate,
)
from .errors import (
    AssumptionViolation,
    ConvergenceError,
    InvalidParameterError,
    OracleFailure,
    ShapeError,
    SimulationDivergence,
    SparseTrackError,
    UnsupportedOperation,
)
from .numerics import soft_threshold, soft_threshold_vec, spectral_norm

BACKEND = kernels.BACKEND

__all__ = [
    "BACKEND",
    "AssumptionViolation",
    "BatchSolveReport",
    "ConvergenceError",
    "ElasticNetParams",
    "InvalidParameterError",
    "MeasurementRound",
    "OracleFailure",
    "ShapeError",
    "SimulationDivergence",
    "SparseTrackError",
    "UnsupportedOperation",
    "batch_solve",
    "cost",
    "ist_step",
    "optimality_residual",
    "soft_threshold",
    "soft_threshold_vec",
    "spectral_norm",
    "surrogate",
]
