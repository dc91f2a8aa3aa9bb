from .acg import AcgInputs, AcgResult, AcgState, acg_step, run_acg
from .aipp import AippConfig, AippResult, aipp_solve, refine
from .aipp_s import (
    ProxDirection,
    check_inner_config,
    directional_tau,
    nash_residuals,
    near_directional_bounds,
    prox_stationarity_bounds,
    smoothing_parameter,
    solve_directional,
    solve_primal_dual,
)
from .qp_aipp import LinearConstraint, QpResult, penalty_saddle_value, qp_aipp_s_solve, qp_aipp_solve
from .raipp import RaippConfig, raipp_solve

__all__ = [
    "AcgInputs",
    "AcgResult",
    "AcgState",
    "AippConfig",
    "AippResult",
    "LinearConstraint",
    "ProxDirection",
    "QpResult",
    "RaippConfig",
    "acg_step",
    "check_inner_config",
    "aipp_solve",
    "directional_tau",
    "nash_residuals",
    "near_directional_bounds",
    "penalty_saddle_value",
    "prox_stationarity_bounds",
    "qp_aipp_s_solve",
    "qp_aipp_solve",
    "raipp_solve",
    "refine",
    "run_acg",
    "smoothing_parameter",
    "solve_directional",
    "solve_primal_dual",
]
