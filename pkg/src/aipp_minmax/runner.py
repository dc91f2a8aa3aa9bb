"""
One solve of one instance with one method, flattened into a report row.

Shared by `aipp-minmax solve` and the bench scheduler. Solver failures never escape: they are
recorded in the row (termination, error) and mapped to an exit code.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .config import get_settings
from .core.errors import AippError, SolverInterrupted
from .core.schemas import SolveReport, StationaryCertificate, Termination
from .problems import Instance
from .smoothing import SmoothedObjective
from .solvers.aipp import AippConfig
from .solvers.aipp_s import relative_scale, smoothing_parameter, solve_directional, solve_primal_dual
from .solvers.qp_aipp import LinearConstraint, qp_aipp_s_solve
from .solvers.raipp import RaippConfig
from .storage import CertificateMeta

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2
EXIT_NOT_CONVERGED = 3

CSV_FIELDS = [
    "family",
    "dims",
    "method",
    "iterations",
    "acg_iterations",
    "oracle_calls",
    "runtime_s",
    "p_hat_xi",
    "norm_u_rel",
    "norm_v",
    "termination",
    "seed",
    "error",
]
DIRECTIONAL_FIELDS = ["delta", "tau", "dd_lower_bound", "distance_bound"]


class Method(str, Enum):
    AIPP_S = "aipp_s"
    RAIPP_S = "raipp_s"
    QP_AIPP_S = "qp_aipp_s"

    @property
    def inner(self) -> str:
        return "raipp" if self is Method.RAIPP_S else "aipp"

    @property
    def label(self) -> str:
        return {"aipp_s": "AIPP-S", "raipp_s": "R-AIPP-S", "qp_aipp_s": "QP-AIPP-S"}[self.value]


@dataclass(frozen=True)
class SolveRequest:
    method: Method
    rho_x: float
    rho_y: float
    eta: float | None = None
    delta: float | None = None
    time_limit: float = field(default_factory=lambda: get_settings().time_limit)
    relative: bool = True
    hat_c: float = 0.0
    strict: bool = False

    def __post_init__(self) -> None:
        for name in ("rho_x", "rho_y", "time_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.method is Method.QP_AIPP_S and not (self.eta is not None and self.eta > 0):
            raise ValueError("qp_aipp_s needs a positive eta")
        if self.delta is not None and self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass
class SolveOutcome:
    row: dict[str, Any]
    exit_code: int
    report: SolveReport | None = None
    certificate: StationaryCertificate | None = None
    meta: CertificateMeta | None = None
    y0: np.ndarray | None = None
    constraint: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def converged(self) -> bool:
        return self.row["termination"] == Termination.CONVERGED.value


def format_runtime(seconds: float, termination: Termination | str, time_limit: float) -> str:
    """Two decimals; a run stopped by the time limit reads as the limit followed by '*'."""
    if Termination(termination) is Termination.TIME_LIMIT:
        return f"{time_limit:.2f}*"
    return f"{seconds:.2f}"


def _configs(request: SolveRequest, m: float, rho_bar: float) -> AippConfig | RaippConfig:
    if request.method is Method.RAIPP_S:
        return RaippConfig(time_limit=request.time_limit)
    return dataclasses.replace(AippConfig.default(m, rho_bar), time_limit=request.time_limit)


def run_method(
    instance: Instance,
    request: SolveRequest,
    constraint: LinearConstraint | None = None,
    *,
    seed: int | None = None,
) -> SolveOutcome:
    problem = instance.problem
    x0 = instance.default_start()
    y0 = np.zeros(problem.n_y)
    xi = smoothing_parameter(problem.D_y, request.rho_y)
    smoothed = SmoothedObjective(problem, xi, y0)
    scale = relative_scale(smoothed, x0) if request.relative else 1.0
    rho_x_abs = request.rho_x * scale
    config = _configs(request, problem.m, rho_x_abs)
    row: dict[str, Any] = {
        "family": instance.family,
        "dims": "x".join(str(d) for d in instance.header()["dims"]),
        "method": request.method.value,
        "seed": "" if seed is None else seed,
        "error": "",
    }
    cert: StationaryCertificate | None = None
    report: SolveReport | None = None
    exit_code = EXIT_OK
    extra: dict[str, Any] = {}
    rho_y_target = request.rho_y

    try:
        if request.method is Method.QP_AIPP_S:
            if constraint is None:
                raise ValueError("qp_aipp_s needs a linear constraint")
            cert, report = qp_aipp_s_solve(
                problem,
                constraint,
                request.rho_x,
                request.rho_y,
                request.eta,  # type: ignore[arg-type]
                x0,
                y0,
                hat_c=request.hat_c,
                xi=xi,
                relative=request.relative,
                config=config,
                warm_start=not request.strict,
            )
        elif request.delta is not None:
            rho_x_abs = request.delta / 2.0
            _, dcert, report = solve_directional(
                problem, request.delta, x0, y0, inner=request.method.inner, config=config  # type: ignore[arg-type]
            )
            cert = dcert.certificate
            if np.isfinite(dcert.tau):
                rho_y_target = dcert.tau
            xi = smoothing_parameter(problem.D_y, dcert.tau if np.isfinite(dcert.tau) else 1.0)
            extra = {
                "delta": request.delta,
                "tau": dcert.tau,
                "dd_lower_bound": dcert.dd_lower_bound,
                "distance_bound": dcert.distance_bound,
            }
        else:
            cert, report = solve_primal_dual(
                problem,
                request.rho_x,
                request.rho_y,
                x0,
                y0,
                xi=xi,
                relative=request.relative,
                inner=request.method.inner,  # type: ignore[arg-type]
                config=config,
            )
    except SolverInterrupted as exc:
        report = exc.report
        cert = exc.certificate
        exit_code = EXIT_NOT_CONVERGED
        row["error"] = str(exc)
        logger.warning("%s on %s stopped: %s", request.method.value, instance.family, exc)
    except AippError as exc:
        exit_code = EXIT_NOT_CONVERGED
        row["error"] = str(exc)
        logger.error("%s on %s failed: %s", request.method.value, instance.family, exc)

    termination = report.termination if report is not None else Termination.ITER_LIMIT
    wall = report.wall_time if report is not None else 0.0
    row.update(
        {
            "iterations": report.outer_iterations if report else "",
            "acg_iterations": report.acg_iterations if report else "",
            "oracle_calls": report.oracle_calls if report else "",
            "runtime_s": format_runtime(wall, termination, request.time_limit),
            "termination": termination.value,
        }
    )
    if cert is not None:
        x_smoothed = SmoothedObjective(problem, xi, y0)
        row["p_hat_xi"] = f"{x_smoothed.p_xi_value(cert.x_bar):.6e}"
        row["norm_u_rel"] = f"{cert.norm_u / scale:.6e}" if np.isfinite(cert.norm_u) else "nan"
        row["norm_v"] = f"{cert.norm_v:.6e}"
    else:
        row.update({"p_hat_xi": "", "norm_u_rel": "", "norm_v": ""})
    row.update(extra)

    meta = None
    if cert is not None and np.all(np.isfinite(cert.u_bar)):
        meta = CertificateMeta(
            family=instance.family,
            method=request.method.value,
            dims=list(instance.header()["dims"]),
            xi=xi,
            rho_x=request.rho_x if request.delta is None else rho_x_abs,
            rho_x_abs=rho_x_abs,
            rho_y=rho_y_target,
            eta=request.eta,
            penalty_c=report.penalty_c_final if report is not None else None,
            relative=request.relative and request.delta is None,
            report=report,
        )
    arrays = None
    if constraint is not None and constraint.matrix is not None:
        arrays = (np.asarray(constraint.matrix, dtype=float), constraint.b)
    return SolveOutcome(row, exit_code, report, cert, meta, y0, arrays)
