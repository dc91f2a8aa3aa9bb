"""
Prox-regularized smoothing of the max function.

    p_xi(x) = max_{y in Y} { Phi(x, y) - ||y - y0||^2 / (2 xi) }

p_xi is differentiable with grad p_xi(x) = grad_x Phi(x, y_xi(x)), m-weakly convex and
L_xi-smooth, and it sandwiches p: p - D_y^2/(2 xi) <= p_xi <= p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.problem import MinMaxProblem
from .core.schemas import Vector


def smoothing_constants(problem: MinMaxProblem, xi: float) -> tuple[float, float]:
    """(Q_xi, L_xi) with Q_xi = xi*L_y + sqrt(xi*(L_x + m)) and L_xi = L_y*Q_xi + L_x."""
    if not xi > 0:
        raise ValueError(f"smoothing parameter xi must be positive, got {xi}")
    q_xi = xi * problem.L_y + math.sqrt(xi * (problem.L_x + problem.m))
    l_xi = problem.L_y * q_xi + problem.L_x
    return q_xi, l_xi


def smoothed_curvature_bound(problem: MinMaxProblem, xi: float) -> float:
    """Closed-form upper bound (L_y*sqrt(xi) + sqrt(L_x))^2 on L_xi."""
    return (problem.L_y * math.sqrt(xi) + math.sqrt(problem.L_x)) ** 2


@dataclass(frozen=True)
class SmoothedObjective:
    problem: MinMaxProblem
    xi: float
    y0: Vector
    Q_xi: float = field(init=False)
    L_xi: float = field(init=False)
    # last (x, y_xi(x)) pair; value and gradient at the same x share one resolvent call
    _last: tuple[Vector, Vector] | None = field(init=False, default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        y0 = np.asarray(self.y0, dtype=float)
        if y0.shape != (self.problem.n_y,):
            raise ValueError(f"y0 has shape {y0.shape}, expected ({self.problem.n_y},)")
        q_xi, l_xi = smoothing_constants(self.problem, self.xi)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "Q_xi", q_xi)
        object.__setattr__(self, "L_xi", l_xi)

    @classmethod
    def with_zero_anchor(cls, problem: MinMaxProblem, xi: float) -> SmoothedObjective:
        return cls(problem, xi, np.zeros(problem.n_y))

    def y_xi(self, x: Vector) -> Vector:
        x = np.asarray(x, dtype=float)
        last = self._last
        if last is not None and np.array_equal(last[0], x):
            return last[1]
        y = self.problem.y_resolvent(self.xi, x, self.y0)
        object.__setattr__(self, "_last", (x.copy(), y))
        return y

    def _value_at(self, x: Vector, y: Vector) -> float:
        return float(self.problem.phi_value(x, y) - np.sum((y - self.y0) ** 2) / (2.0 * self.xi))

    def p_xi_value(self, x: Vector) -> float:
        return self._value_at(x, self.y_xi(x))

    def grad_p_xi(self, x: Vector) -> Vector:
        return self.problem.grad_x_phi(x, self.y_xi(x))

    def value_and_grad(self, x: Vector) -> tuple[float, Vector, Vector]:
        """(p_xi(x), grad p_xi(x), y_xi(x)) from a single resolvent call."""
        y = self.y_xi(x)
        return self._value_at(x, y), self.problem.grad_x_phi(x, y), y

    def dual_residual(self, x: Vector) -> tuple[Vector, Vector]:
        """(y_xi(x), (y0 - y_xi(x)) / xi)."""
        y = self.y_xi(x)
        return y, (self.y0 - y) / self.xi

    def sandwich_gap(self, x: Vector, p_value: float) -> tuple[float, float]:
        """Slacks of p - D_y^2/(2 xi) <= p_xi <= p; both are >= 0 when the bound holds."""
        p_xi = self.p_xi_value(x)
        lower = p_xi - (p_value - self.problem.D_y**2 / (2.0 * self.xi))
        upper = p_value - p_xi
        return float(lower), float(upper)
