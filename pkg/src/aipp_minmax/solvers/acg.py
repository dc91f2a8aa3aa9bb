"""
Accelerated composite gradient (ACG) inner solver.

Minimizes psi_s + psi_n where psi_s is convex with L-Lipschitz gradient and psi_n is
mu-strongly convex with an exact prox. Every iterate carries a triple (z, u, eps) with
u in the eps-subdifferential of psi_s + psi_n at z; callers stop on the relative test

    ||u||^2 + 2 eps <= sigma ||z0 - z + u||^2.

The affine lower model Gamma_j = alpha_j + <., beta_j> of psi_s is stored by its intercept and
normal vector, so the state stays O(n).
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ..config import get_settings
from ..core.errors import InvalidCurvature, NonConvergence, TimeLimitExceeded
from ..core.schemas import Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AcgInputs:
    """psi_n_prox(alpha, a) = argmin { psi_n(y) + ||y - a||^2 / (2 alpha) }."""

    mu: float
    L: float
    psi_s_value: Callable[[Vector], float]
    psi_s_grad: Callable[[Vector], Vector]
    psi_n_prox: Callable[[float, Vector], Vector]
    psi_n_value: Callable[[Vector], float]
    z0: Vector

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.L < self.mu:
            raise ValueError(f"L ({self.L}) must be at least mu ({self.mu})")
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float))


@dataclass(frozen=True)
class AcgState:
    A: float
    z: Vector
    y: Vector
    gamma_alpha: float
    gamma_beta: Vector
    u: Vector
    eps: float
    j: int
    # psi_s at z, and the extrapolation data of the step that produced this state
    psi_s_z: float = float("nan")
    z_tilde: Vector | None = None
    psi_s_tilde: float = float("nan")
    grad_tilde: Vector | None = None

    @classmethod
    def initial(cls, z0: Vector) -> AcgState:
        z0 = np.asarray(z0, dtype=float)
        return cls(
            A=0.0,
            z=z0.copy(),
            y=z0.copy(),
            gamma_alpha=0.0,
            gamma_beta=np.zeros_like(z0),
            u=np.zeros_like(z0),
            eps=0.0,
            j=0,
        )

    def gamma(self, y: Vector) -> float:
        return float(self.gamma_alpha + self.gamma_beta @ y)


@dataclass(frozen=True)
class AcgResult:
    z: Vector
    u: Vector
    eps: float
    iters: int
    state: AcgState


def acg_iteration_bound(L: float, sigma: float) -> int:
    """Worst-case iterations to reach the relative test when psi_n is 1/2-strongly convex."""
    return math.ceil(2.0 * math.sqrt(2.0 * L) * (1.0 + math.sqrt(sigma)) / math.sqrt(sigma))


def next_A(A: float, mu: float, L: float) -> float:
    a = mu * A + 1.0
    return A + (a + math.sqrt(a * a + 4.0 * L * a * A)) / (2.0 * L)


def acg_step(state: AcgState, inputs: AcgInputs, *, eps_rounding: float | None = None) -> AcgState:
    """One ACG iteration: extrapolate, update the affine model, prox step, form (u, eps)."""
    if eps_rounding is None:
        eps_rounding = get_settings().acg.eps_rounding
    A = state.A
    A_next = next_A(A, inputs.mu, inputs.L)
    w_old = A / A_next
    w_new = (A_next - A) / A_next

    z_tilde = w_old * state.z + w_new * state.y
    psi_tilde = float(inputs.psi_s_value(z_tilde))
    grad_tilde = inputs.psi_s_grad(z_tilde)

    alpha = w_old * state.gamma_alpha + w_new * (psi_tilde - float(grad_tilde @ z_tilde))
    beta = w_old * state.gamma_beta + w_new * grad_tilde

    y0 = inputs.z0
    y_next = inputs.psi_n_prox(A_next, y0 - A_next * beta)
    z_next = w_old * state.z + w_new * y_next

    u = (y0 - y_next) / A_next
    psi_s_z = float(inputs.psi_s_value(z_next))
    psi_z = psi_s_z + float(inputs.psi_n_value(z_next))
    eps = psi_z - (alpha + float(beta @ y_next)) - float(inputs.psi_n_value(y_next)) - float(u @ (z_next - y_next))
    if eps < 0.0:
        if eps < -eps_rounding * max(1.0, abs(psi_z)):
            raise InvalidCurvature(f"ACG produced eps={eps:.3e} < 0; psi_s is not convex along the path")
        eps = 0.0

    return AcgState(
        A=A_next,
        z=z_next,
        y=y_next,
        gamma_alpha=alpha,
        gamma_beta=beta,
        u=u,
        eps=eps,
        j=state.j + 1,
        psi_s_z=psi_s_z,
        z_tilde=z_tilde,
        psi_s_tilde=psi_tilde,
        grad_tilde=grad_tilde,
    )


def hpe_holds(state: AcgState, z0: Vector, sigma: float) -> bool:
    lhs = float(state.u @ state.u) + 2.0 * state.eps
    rhs = sigma * float(np.sum((z0 - state.z + state.u) ** 2))
    return lhs <= rhs


def run_acg(
    inputs: AcgInputs,
    sigma: float,
    min_iters: int = 0,
    extra_predicate: Callable[[AcgState], bool] | None = None,
    *,
    state: AcgState | None = None,
    max_iters: int | None = None,
    deadline: float | None = None,
) -> AcgResult:
    """Iterate until j >= min_iters, the relative test and `extra_predicate` all hold.

    Passing a previous `state` resumes that run instead of restarting from z0; the resumed
    state is itself checked before any new step is taken.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    settings = get_settings().acg
    if max_iters is None:
        max_iters = settings.max_iters
    current = AcgState.initial(inputs.z0) if state is None else state

    def accepted(s: AcgState) -> bool:
        if s.j < max(min_iters, 1) or not hpe_holds(s, inputs.z0, sigma):
            return False
        return extra_predicate is None or extra_predicate(s)

    start_j = current.j
    while not accepted(current):
        if current.j - start_j >= max_iters:
            raise NonConvergence(f"ACG did not terminate within {max_iters} iterations", state=current)
        if deadline is not None and time.perf_counter() > deadline:
            raise TimeLimitExceeded("time limit reached inside ACG", state=current)
        current = acg_step(current, inputs, eps_rounding=settings.eps_rounding)
    logger.debug("ACG accepted at j=%d (eps=%.3e, |u|=%.3e)", current.j, current.eps, float(np.linalg.norm(current.u)))
    return AcgResult(z=current.z, u=current.u, eps=current.eps, iters=current.j, state=current)


def with_curvature(inputs: AcgInputs, L: float) -> AcgInputs:
    return dataclasses.replace(inputs, L=max(L, inputs.mu))
