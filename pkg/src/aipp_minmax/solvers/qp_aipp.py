"""
Quadratic-penalty AIPP for linearly constrained problems.

QP-AIPP minimizes f + h subject to Ax = b by running AIPP on the penalized function

    f_c(x) = f(x) + (c/2) ||Ax - b||^2,   M_c = M + c ||A||^2,

starting from c = c_hat + M/||A||^2 and doubling c until ||Ax_bar - b|| <= eta. The multiplier
is recovered as r_bar = c (Ax_bar - b), so u_bar lies in grad f(x_bar) + dh(x_bar) + A* r_bar.
QP-AIPP-S applies the same loop to the smoothed max function p_xi.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
from scipy.sparse.linalg import aslinearoperator

from ..config import get_settings
from ..core.errors import Divergence, SolverInterrupted
from ..core.linalg import operator_norm
from ..core.problem import MinMaxProblem, OracleTally
from ..core.schemas import SolveReport, StationaryCertificate, Termination, Vector
from ..smoothing import SmoothedObjective
from .aipp import AippConfig, aipp_solve
from .aipp_s import InnerMethod, check_inner_config, relative_scale, smoothing_parameter
from .raipp import RaippConfig, raipp_solve

logger = logging.getLogger(__name__)

MAX_DOUBLINGS = 60
PENALTY_CAP_RATIO = 1e16


@dataclass(frozen=True)
class LinearConstraint:
    """Affine constraint Ax = b given through matvec / rmatvec oracles."""

    apply: Callable[[Vector], Vector]
    apply_adjoint: Callable[[Vector], Vector]
    b: Vector
    norm_A: float
    matrix: Any = None

    def __post_init__(self) -> None:
        if not self.norm_A > 0:
            raise ValueError("LinearConstraint: A must not be identically zero")
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))

    @classmethod
    def from_matrix(cls, A: Any, b: Any, tol: float = 1e-8) -> LinearConstraint:
        """Wrap a dense/sparse matrix, certifying ||A|| by power iteration."""
        op = aslinearoperator(A)
        return cls(
            apply=op.matvec,
            apply_adjoint=op.rmatvec,
            b=np.asarray(b, dtype=float),
            norm_A=operator_norm(A, tol),
            matrix=A,
        )

    def residual(self, x: Vector) -> Vector:
        return self.apply(x) - self.b

    def violation(self, x: Vector) -> float:
        return float(np.linalg.norm(self.residual(x)))

    def check_adjoint(self, rng: np.random.Generator, n: int, trials: int = 20) -> float:
        """Largest relative mismatch of <Ax, r> and <x, A*r> over random pairs."""
        worst = 0.0
        for _ in range(trials):
            x = rng.standard_normal(n)
            r = rng.standard_normal(self.b.size)
            lhs = float(self.apply(x) @ r)
            rhs = float(x @ self.apply_adjoint(r))
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
        return worst


class QpResult(NamedTuple):
    x_bar: Vector
    u_bar: Vector
    r_bar: Vector
    report: SolveReport


def penalized(
    f_value: Callable[[Vector], float],
    f_grad: Callable[[Vector], Vector],
    constraint: LinearConstraint,
    c: float,
) -> tuple[Callable[[Vector], float], Callable[[Vector], Vector]]:
    """(f_c, grad f_c) for f_c = f + (c/2)||Ax - b||^2."""

    def value(x: Vector) -> float:
        res = constraint.residual(x)
        return f_value(x) + 0.5 * c * float(res @ res)

    def grad(x: Vector) -> Vector:
        return f_grad(x) + c * constraint.apply_adjoint(constraint.residual(x))

    return value, grad


def qp_aipp_solve(
    f_value: Callable[[Vector], float],
    f_grad: Callable[[Vector], Vector],
    h_value: Callable[[Vector], float],
    h_resolvent: Callable[[float, Vector], Vector],
    m: float,
    M: float,
    constraint: LinearConstraint,
    x0: Vector,
    rho_bar: float,
    eta_bar: float,
    *,
    hat_c: float = 0.0,
    config: AippConfig | RaippConfig | None = None,
    inner: InnerMethod = "aipp",
    warm_start: bool = True,
    tally: OracleTally | None = None,
) -> QpResult:
    """Penalty loop around AIPP (or R-AIPP with `inner="raipp"`).

    `warm_start=False` restarts every penalty round from x0. All rounds share one time limit, taken
    from `config` or the settings. Raises Divergence once c has been doubled MAX_DOUBLINGS times
    or exceeds PENALTY_CAP_RATIO * c0.
    """
    check_inner_config(inner, config)
    if not (rho_bar > 0 and eta_bar > 0):
        raise ValueError(f"rho_bar and eta_bar must be positive (got {rho_bar}, {eta_bar})")
    if hat_c < 0:
        raise ValueError(f"hat_c must be nonnegative, got {hat_c}")
    started = time.perf_counter()
    if tally is None:
        tally = OracleTally()
        f_value = tally.wrap("f", f_value)
        f_grad = tally.wrap("grad_f", f_grad)
        h_value = tally.wrap("h", h_value)
        h_resolvent = tally.wrap("h_resolvent", h_resolvent)

    norm_sq = constraint.norm_A**2
    c0 = hat_c + M / norm_sq
    c = c0
    x_start = np.asarray(x0, dtype=float)
    time_limit = config.time_limit if config is not None else get_settings().time_limit
    outer_total = 0
    acg_total = 0
    penalty_trace: list[float] = []
    feasibility_trace: list[float] = []

    def merged(report: SolveReport, termination: Termination) -> SolveReport:
        return report.model_copy(
            update={
                "outer_iterations": outer_total,
                "acg_iterations": acg_total,
                "oracle_calls": max(tally.total, acg_total),
                "oracle_counts": tally.as_dict(),
                "wall_time": time.perf_counter() - started,
                "termination": termination,
                "penalty_c_final": c,
                "penalty_trace": list(penalty_trace),
                "feasibility_trace": list(feasibility_trace),
            }
        )

    for doubling in range(MAX_DOUBLINGS + 1):
        if c > PENALTY_CAP_RATIO * c0:
            break
        penalty_trace.append(c)
        fc_value, fc_grad = penalized(f_value, f_grad, constraint, c)
        M_c = M + c * norm_sq
        remaining = max(time_limit - (time.perf_counter() - started), 0.0)
        try:
            if inner == "raipp":
                rcfg = config if isinstance(config, RaippConfig) else RaippConfig()
                rcfg = dataclasses.replace(rcfg, time_limit=remaining)
                x_bar, u_bar, report = raipp_solve(
                    fc_value, fc_grad, h_value, h_resolvent, m, M_c, x_start, rho_bar, rcfg, tally=tally
                )
            else:
                acfg = config if isinstance(config, AippConfig) else AippConfig.default(m, rho_bar)
                acfg = dataclasses.replace(acfg, rho_bar=rho_bar, time_limit=remaining)
                x_bar, u_bar, report = aipp_solve(
                    fc_value, fc_grad, h_value, h_resolvent, m, M_c, acfg, x_start, tally=tally
                )
        except SolverInterrupted as exc:
            if exc.report is not None:
                outer_total += exc.report.outer_iterations
                acg_total += exc.report.acg_iterations
                exc.report = merged(exc.report, exc.termination)
            raise
        outer_total += report.outer_iterations
        acg_total += report.acg_iterations
        residual = constraint.residual(x_bar)
        violation = float(np.linalg.norm(residual))
        feasibility_trace.append(violation)
        logger.info("QP-AIPP round %d: c=%.3e |Ax-b|=%.3e", doubling, c, violation)
        if violation <= eta_bar:
            r_bar = c * residual
            final = merged(report, Termination.CONVERGED).model_copy(update={"terminal_value": float(f_value(x_bar) + h_value(x_bar))})
            return QpResult(x_bar, u_bar, r_bar, final)
        c *= 2.0
        x_start = x_bar if warm_start else np.asarray(x0, dtype=float)
    raise Divergence(
        f"penalty parameter reached c={c:.3e} (c0={c0:.3e}) without |Ax-b| <= {eta_bar}; "
        "the penalty-boundedness assumption is likely violated"
    )


def qp_aipp_s_solve(
    problem: MinMaxProblem,
    constraint: LinearConstraint,
    rho_x: float,
    rho_y: float,
    eta: float,
    x0: Vector,
    y0: Vector | None = None,
    *,
    hat_c: float = 0.0,
    xi: float | None = None,
    relative: bool = False,
    inner: InnerMethod = "aipp",
    config: AippConfig | RaippConfig | None = None,
    warm_start: bool = True,
) -> tuple[StationaryCertificate, SolveReport]:
    """(rho_x, rho_y, eta)-stationary quintuple of the linearly constrained min-max problem.

    On interruption the raised error carries a certificate built at the last iterate, with the
    multiplier taken at the last penalty parameter.
    """
    counted, tally = problem.counted()
    if xi is None:
        xi = smoothing_parameter(problem.D_y, rho_y)
    y0 = np.zeros(problem.n_y) if y0 is None else np.asarray(y0, dtype=float)
    smoothed = SmoothedObjective(counted, xi, y0)
    x0 = np.asarray(x0, dtype=float)
    rho_bar = rho_x * relative_scale(smoothed, x0) if relative else rho_x
    try:
        x_bar, u_bar, r_bar, report = qp_aipp_solve(
            smoothed.p_xi_value,
            smoothed.grad_p_xi,
            counted.h_value,
            counted.h_resolvent,
            problem.m,
            smoothed.L_xi,
            constraint,
            x0,
            rho_bar,
            eta,
            hat_c=hat_c,
            config=config,
            inner=inner,
            warm_start=warm_start,
            tally=tally,
        )
    except SolverInterrupted as exc:
        if exc.x is not None:
            x_last = problem.h_resolvent(1.0, exc.x)
            y_last, v_last = SmoothedObjective(problem, xi, y0).dual_residual(x_last)
            c_last = exc.report.penalty_c_final if exc.report is not None else None
            exc.certificate = StationaryCertificate.from_vectors(
                np.full_like(x_last, np.nan),
                v_last,
                x_last,
                y_last,
                r_bar=None if c_last is None else c_last * constraint.residual(x_last),
                feas_violation=constraint.violation(x_last),
            )
        raise
    y_bar, v_bar = SmoothedObjective(problem, xi, y0).dual_residual(x_bar)
    cert = StationaryCertificate.from_vectors(
        u_bar, v_bar, x_bar, y_bar, r_bar=r_bar, feas_violation=constraint.violation(x_bar)
    )
    return cert, report


def penalty_saddle_value(
    inner_max: Callable[[Vector], float],
    h_value: Callable[[Vector], float],
    constraint: LinearConstraint,
    c: float,
    x: Vector,
) -> float:
    """p_{c,xi}(x) + h(x) through its saddle form.

    `inner_max(x)` returns max_y Phi_xi(x, y) (any maximizer, e.g. a grid search); the
    multiplier block max_r <r, Ax - b> - ||r||^2/(2c) is attained at r = c(Ax - b).
    """
    res = constraint.residual(x)
    r = c * res
    multiplier_term = float(r @ res) - float(r @ r) / (2.0 * c)
    return inner_max(x) + multiplier_term + h_value(x)
