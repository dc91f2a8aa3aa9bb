"""
R-AIPP: the practical AIPP variant with adaptive stepsize, adaptive tau and an adaptive
upper-curvature estimate.

Differences from `aipp_solve`:

* lam starts at 1/m (past the 1/(2m) safe bound) and doubles after every good iteration up to
  100/m; it is halved whenever the prox subproblem shows negative curvature, the inner ACG blows
  its iteration budget, or the refined residual is too large relative to the prox displacement.
  An iteration is good when no halving has happened so far in the run.
* the inner ACG accepts a triple as soon as ||u||^2 + 2 eps <= sigma_hat ||z0 - z + u||^2 with
  sigma_hat close to 1 and no minimum number of iterations.
* the curvature M used by ACG starts at M_guess/100 and doubles (redoing the step) whenever the
  quadratic upper model is violated.
* every outer iterate is refined; the run stops when the refined residual is below rho_bar.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ..config import get_settings
from ..core.errors import InvalidCurvature, NonConvergence, SolverInterrupted, TimeLimitExceeded
from ..core.problem import OracleTally
from ..core.schemas import SolveReport, Termination, Vector
from .acg import AcgInputs, AcgState, acg_step, hpe_holds, with_curvature
from .aipp import AippResult, prox_subproblem_inputs, refine

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RaippConfig:
    sigma_hat: float = 0.999
    lam_cap_factor: float = 100.0
    curvature_start_ratio: float = 0.01
    tau0: float | None = None
    budget_factor: int = 10
    max_halvings: int = 60
    max_outer: int = 1_000_000
    time_limit: float = field(default_factory=lambda: get_settings().time_limit)

    def __post_init__(self) -> None:
        if not 0.0 < self.sigma_hat < 1.0:
            raise ValueError(f"sigma_hat must lie in (0, 1), got {self.sigma_hat}")
        if self.lam_cap_factor < 1.0:
            raise ValueError("lam_cap_factor must be at least 1")


def next_stepsize(lam: float, good: bool, m: float, cap_factor: float = 100.0) -> float:
    return min(2.0 * lam, cap_factor / m) if good else lam


def next_tau(tau: float, pi: float) -> float:
    if not math.isfinite(pi) or pi <= 0.0:
        return tau
    if pi > 1.5:
        return 1.5 * tau / pi
    if pi < 1.2:
        return 1.2 * tau / pi
    return tau


class _HalveStep(Exception):
    def __init__(self, reason: str, iters: int) -> None:
        super().__init__(reason)
        self.reason = reason
        self.iters = iters


def _adaptive_acg(
    inputs: AcgInputs,
    lam: float,
    M_est: float,
    sigma_hat: float,
    budget_factor: int,
    deadline: float,
) -> tuple[AcgState, float, int]:
    """ACG with doubling backtracking on M; returns (state, M estimate, steps taken)."""
    state = AcgState.initial(inputs.z0)
    L = lam * M_est + 0.5
    steps = 0
    eps_rounding = get_settings().acg.eps_rounding
    while state.j == 0 or not hpe_holds(state, inputs.z0, sigma_hat):
        budget = budget_factor * math.ceil(2.0 * math.sqrt(2.0 * L) / math.sqrt(sigma_hat))
        if state.j >= budget:
            raise _HalveStep("inner iteration budget exceeded", steps)
        if time.perf_counter() > deadline:
            raise TimeLimitExceeded("time limit reached inside adaptive ACG", state=state)
        try:
            trial = acg_step(state, with_curvature(inputs, L), eps_rounding=eps_rounding)
        except InvalidCurvature:
            raise _HalveStep("negative eps", steps + 1) from None
        steps += 1
        z_tilde = trial.z_tilde if trial.z_tilde is not None else state.z
        grad_tilde = trial.grad_tilde if trial.grad_tilde is not None else np.zeros_like(z_tilde)
        d = trial.z - z_tilde
        linear = trial.psi_s_tilde + float(grad_tilde @ d)
        slack = 1e-10 * max(1.0, abs(trial.psi_s_tilde))
        if trial.psi_s_z < linear - slack:
            raise _HalveStep("negative curvature along the ACG path", steps)
        if trial.psi_s_z > linear + 0.5 * L * float(d @ d) + slack:
            M_est *= 2.0
            L = lam * M_est + 0.5
            continue
        state = trial
    return state, M_est, steps


def raipp_solve(
    f_value: Callable[[Vector], float],
    f_grad: Callable[[Vector], Vector],
    h_value: Callable[[Vector], float],
    h_resolvent: Callable[[float, Vector], Vector],
    m: float,
    M_guess: float,
    x0: Vector,
    rho_bar: float,
    config: RaippConfig | None = None,
    *,
    tally: OracleTally | None = None,
) -> AippResult:
    if config is None:
        config = RaippConfig()
    if not rho_bar > 0:
        raise ValueError(f"rho_bar must be positive, got {rho_bar}")
    started = time.perf_counter()
    deadline = started + config.time_limit
    if tally is None:
        tally = OracleTally()
        f_value = tally.wrap("f", f_value)
        f_grad = tally.wrap("grad_f", f_grad)
        h_value = tally.wrap("h", h_value)
        h_resolvent = tally.wrap("h_resolvent", h_resolvent)

    lam = 1.0 / m
    tau = config.tau0 if config.tau0 is not None else 10.0 * (lam * M_guess + 1.0)
    M_est = max(M_guess * config.curvature_start_ratio, np.finfo(float).tiny)
    ever_halved = False
    lam_trace: list[float] = []
    tau_trace: list[float] = []
    acg_total = 0
    x_prev = np.asarray(x0, dtype=float)

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
            lambda_trace=list(lam_trace),
            tau_trace=list(tau_trace),
            curvature_estimate=M_est,
        )

    k = 0
    try:
        for k in range(1, config.max_outer + 1):
            if time.perf_counter() > deadline:
                raise TimeLimitExceeded(f"time limit {config.time_limit}s reached after {k - 1} outer iterations")
            halvings = 0
            while True:
                inputs = prox_subproblem_inputs(f_value, f_grad, h_value, h_resolvent, lam, M_est, x_prev)
                try:
                    state, M_est, steps = _adaptive_acg(
                        inputs, lam, M_est, config.sigma_hat, config.budget_factor, deadline
                    )
                    acg_total += steps
                except _HalveStep as halt:
                    acg_total += halt.iters
                    reason = halt.reason
                else:
                    x_hat, v_hat = refine(state.z, f_grad, h_resolvent, M_est + 1.0 / lam)
                    norm_v = float(np.linalg.norm(v_hat))
                    displacement = float(np.linalg.norm(state.u + x_prev - state.z))
                    if norm_v <= rho_bar:
                        lam_trace.append(lam)
                        tau_trace.append(tau)
                        logger.info("R-AIPP converged: outer=%d acg=%d |u_bar|=%.3e", k, acg_total, norm_v)
                        return AippResult(x_hat, v_hat, report(k, Termination.CONVERGED, x_hat))
                    if lam * norm_v <= tau * displacement:
                        break
                    reason = "refined residual too large for the prox displacement"
                halvings += 1
                if halvings > config.max_halvings:
                    raise NonConvergence(f"R-AIPP halved lam {config.max_halvings} times in one iteration")
                lam /= 2.0
                ever_halved = True
                logger.info("R-AIPP k=%d: halving lam to %.3e (%s)", k, lam, reason)

            pi = lam * norm_v / displacement if displacement > 0 else math.inf
            lam_trace.append(lam)
            tau_trace.append(tau)
            logger.debug(
                "R-AIPP k=%d lam=%.3e tau=%.3e pi=%.3f M_est=%.3e |v_hat|=%.3e", k, lam, tau, pi, M_est, norm_v
            )
            lam = next_stepsize(lam, not ever_halved, m, config.lam_cap_factor)
            tau = next_tau(tau, pi)
            x_prev = state.z
        raise NonConvergence(f"R-AIPP did not converge within {config.max_outer} outer iterations")
    except SolverInterrupted as exc:
        last = x_prev if exc.state is None else exc.state.z
        exc.x = last
        exc.report = report(k, exc.termination, last)
        raise
