"""
Accelerated inexact proximal point (AIPP) method for min f(x) + h(x).

f is smooth with curvature in [-m, M]; h is closed convex with an exact resolvent. Each outer
iteration solves the prox subproblem

    min lam*(f + h)(x) + 1/2 ||x - x_prev||^2

inexactly with ACG, splitting the quadratic evenly between the smooth and the composite part.
Once the prox displacement is small, the last ACG run is resumed until its eps is tiny and a
refinement step turns the iterate into a point with a certified residual u_bar in
grad f(x_bar) + dh(x_bar).
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..config import get_settings
from ..core.errors import InvalidCurvature, NonConvergence, SolverInterrupted, TimeLimitExceeded
from ..core.problem import OracleTally
from ..core.schemas import SolveReport, Termination, Vector
from .acg import AcgInputs, run_acg

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AippConfig:
    lam: float
    sigma: float = 0.5
    rho_bar: float = 1e-2
    max_outer: int = 1_000_000
    time_limit: float = field(default_factory=lambda: get_settings().time_limit)

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.rho_bar > 0:
            raise ValueError(f"rho_bar must be positive, got {self.rho_bar}")

    @classmethod
    def default(cls, m: float, rho_bar: float, **overrides: float) -> AippConfig:
        """sigma = 1/2 and lam = 1/(4m)."""
        params = {"lam": 1.0 / (4.0 * m), "sigma": 0.5, "rho_bar": rho_bar}
        params.update(overrides)
        return cls(**params)  # type: ignore[arg-type]


class AippResult(NamedTuple):
    x_bar: Vector
    u_bar: Vector
    report: SolveReport


def aipp_min_inner_iterations(lam: float, M: float) -> int:
    return math.ceil(6.0 * math.sqrt(2.0 * lam * M + 1.0))


def refine(
    x: Vector,
    f_grad: Callable[[Vector], Vector],
    h_resolvent: Callable[[float, Vector], Vector],
    M_lambda: float,
) -> tuple[Vector, Vector]:
    """One prox-gradient step from x with stepsize 1/M_lambda.

    x_bar = argmin <grad f(x), . - x> + h + (M_lambda/2)||. - x||^2 and
    u_bar = M_lambda (x - x_bar) + grad f(x_bar) - grad f(x), so u_bar lies in
    grad f(x_bar) + dh(x_bar) exactly.
    """
    g = f_grad(x)
    x_bar = h_resolvent(1.0 / M_lambda, x - g / M_lambda)
    u_bar = M_lambda * (x - x_bar) + f_grad(x_bar) - g
    return x_bar, u_bar


def prox_subproblem_inputs(
    f_value: Callable[[Vector], float],
    f_grad: Callable[[Vector], Vector],
    h_value: Callable[[Vector], float],
    h_resolvent: Callable[[float, Vector], Vector],
    lam: float,
    M: float,
    anchor: Vector,
) -> AcgInputs:
    """ACG data for min lam*(f+h) + 1/2||. - anchor||^2 with the quadratic split 1/4 + 1/4."""

    def psi_s_value(x: Vector) -> float:
        return lam * f_value(x) + 0.25 * float(np.sum((x - anchor) ** 2))

    def psi_s_grad(x: Vector) -> Vector:
        return lam * f_grad(x) + 0.5 * (x - anchor)

    def psi_n_value(x: Vector) -> float:
        hv = h_value(x)
        return lam * hv + 0.25 * float(np.sum((x - anchor) ** 2)) if np.isfinite(hv) else np.inf

    def psi_n_prox(alpha: float, a: Vector) -> Vector:
        # lam*h + 1/4||.-anchor||^2 + 1/(2 alpha)||.-a||^2 collapses to one h-resolvent
        s = 2.0 * alpha / (alpha + 2.0)
        w = (alpha * anchor + 2.0 * a) / (alpha + 2.0)
        return h_resolvent(lam * s, w)

    return AcgInputs(
        mu=0.5,
        L=lam * M + 0.5,
        psi_s_value=psi_s_value,
        psi_s_grad=psi_s_grad,
        psi_n_prox=psi_n_prox,
        psi_n_value=psi_n_value,
        z0=anchor,
    )


def aipp_solve(
    f_value: Callable[[Vector], float],
    f_grad: Callable[[Vector], Vector],
    h_value: Callable[[Vector], float],
    h_resolvent: Callable[[float, Vector], Vector],
    m: float,
    M: float,
    config: AippConfig,
    x0: Vector,
    *,
    tally: OracleTally | None = None,
) -> AippResult:
    """Run AIPP from x0 until the refined residual satisfies ||u_bar|| <= rho_bar.

    Raises InvalidCurvature when lam > 1/(2m); TimeLimitExceeded / NonConvergence carry the
    partial report and the last outer iterate.
    """
    if config.lam > 1.0 / (2.0 * m) * (1.0 + 1e-12):
        raise InvalidCurvature(f"lam={config.lam} exceeds 1/(2m)={1.0 / (2.0 * m)}")
    started = time.perf_counter()
    deadline = started + config.time_limit
    if tally is None:
        tally = OracleTally()
        f_value = tally.wrap("f", f_value)
        f_grad = tally.wrap("grad_f", f_grad)
        h_value = tally.wrap("h", h_value)
        h_resolvent = tally.wrap("h_resolvent", h_resolvent)

    lam, sigma, rho_bar = config.lam, config.sigma, config.rho_bar
    M_lambda = M + 1.0 / lam
    rho_hat = rho_bar / 4.0
    eps_hat = rho_bar**2 / (32.0 * M_lambda)
    min_iters = aipp_min_inner_iterations(lam, M)

    x_prev = np.asarray(x0, dtype=float)
    acg_total = 0
    counted_in_run = 0

    def report(outer: int, termination: Termination, x: Vector) -> SolveReport:
        value = float(f_value(x) + h_value(x))
        return SolveReport(
            outer_iterations=outer,
            acg_iterations=acg_total,
            oracle_calls=max(tally.total, acg_total),
            oracle_counts=tally.as_dict(),
            wall_time=time.perf_counter() - started,
            terminal_value=value,
            termination=termination,
        )

    k = 0
    try:
        for k in range(1, config.max_outer + 1):
            if time.perf_counter() > deadline:
                raise TimeLimitExceeded(f"time limit {config.time_limit}s reached after {k - 1} outer iterations")
            inputs = prox_subproblem_inputs(f_value, f_grad, h_value, h_resolvent, lam, M, x_prev)
            counted_in_run = 0
            res = run_acg(inputs, sigma, min_iters, deadline=deadline)
            acg_total += res.iters
            counted_in_run = res.iters
            displacement = float(np.linalg.norm(x_prev - res.z + res.u))
            logger.debug("AIPP k=%d inner=%d |x_prev - x + u|=%.3e", k, res.iters, displacement)

            if displacement <= lam * rho_hat / 5.0:
                res = run_acg(
                    inputs,
                    sigma,
                    min_iters,
                    lambda s: s.eps <= eps_hat * lam,
                    state=res.state,
                    deadline=deadline,
                )
                acg_total += res.iters - counted_in_run
                counted_in_run = res.iters
                x_bar, u_bar = refine(res.z, f_grad, h_resolvent, M_lambda)
                norm_u = float(np.linalg.norm(u_bar))
                if norm_u <= rho_bar:
                    logger.info("AIPP converged: outer=%d acg=%d |u_bar|=%.3e", k, acg_total, norm_u)
                    return AippResult(x_bar, u_bar, report(k, Termination.CONVERGED, x_bar))
                logger.warning("AIPP refine residual %.3e above %.3e; continuing", norm_u, rho_bar)
            x_prev = res.z
        raise NonConvergence(f"AIPP did not converge within {config.max_outer} outer iterations")
    except SolverInterrupted as exc:
        last = x_prev if exc.state is None else exc.state.z
        if exc.state is not None:
            acg_total += max(exc.state.j - counted_in_run, 0)
        exc.x = last
        exc.report = report(k, exc.termination, last)
        raise
