from .errors import (
    AippError,
    CalibrationError,
    DimensionError,
    Divergence,
    InvalidCurvature,
    LibsvmFormatError,
    NonConvergence,
    SolverInterrupted,
    TimeLimitExceeded,
    Unsupported,
)
from .linalg import normal_cone_distance, operator_norm, project_box, project_simplex
from .problem import InvariantReport, MinMaxProblem, OracleTally, SetSpec, check_invariants
from .schemas import (
    DirectionalCertificate,
    SetKind,
    SolveReport,
    StationaryCertificate,
    Termination,
    Vector,
)

__all__ = [
    "AippError",
    "CalibrationError",
    "DimensionError",
    "DirectionalCertificate",
    "Divergence",
    "InvalidCurvature",
    "InvariantReport",
    "LibsvmFormatError",
    "MinMaxProblem",
    "NonConvergence",
    "OracleTally",
    "SetKind",
    "SetSpec",
    "SolveReport",
    "SolverInterrupted",
    "StationaryCertificate",
    "Termination",
    "TimeLimitExceeded",
    "Unsupported",
    "Vector",
    "check_invariants",
    "normal_cone_distance",
    "operator_norm",
    "project_box",
    "project_simplex",
]
