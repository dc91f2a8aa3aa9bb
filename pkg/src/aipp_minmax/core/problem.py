"""
Problem-oracle abstraction shared by every solver.

A `MinMaxProblem` bundles the oracles of

    min_{x in X} max_{y in Y} Phi(x, y) + h(x)

with the constants (m, L_x, L_y, D_y). Instances are immutable and safe to share across threads;
per-solve oracle accounting goes through `counted`, which returns a wrapped copy.
"""

from __future__ import annotations

import dataclasses
import threading
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidCurvature, Unsupported
from .linalg import normal_cone_distance, project_box, project_simplex
from .schemas import SetKind, Vector

PhiValue = Callable[[Vector, Vector], float]
PhiGrad = Callable[[Vector, Vector], Vector]
Resolvent = Callable[[float, Vector], Vector]
YResolvent = Callable[[float, Vector, Vector], Vector]
HValue = Callable[[Vector], float]


# ---------------------------------------------------------------------------
# Sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetSpec:
    """A simplex, a box [lo, hi]^n or the whole space."""

    kind: SetKind
    lo: float = 0.0
    hi: float = 1.0

    @classmethod
    def simplex(cls) -> SetSpec:
        return cls(SetKind.SIMPLEX)

    @classmethod
    def box(cls, lo: float, hi: float) -> SetSpec:
        if lo > hi:
            raise ValueError(f"box bounds out of order: lo={lo}, hi={hi}")
        return cls(SetKind.BOX, lo, hi)

    @classmethod
    def free(cls) -> SetSpec:
        return cls(SetKind.FREE, -np.inf, np.inf)

    def project(self, v: Vector) -> Vector:
        if self.kind is SetKind.SIMPLEX:
            return project_simplex(v)
        if self.kind is SetKind.BOX:
            return project_box(v, self.lo, self.hi)
        return np.asarray(v, dtype=float).copy()

    def contains(self, v: Vector, tol: float = 1e-9) -> bool:
        v = np.asarray(v, dtype=float)
        if self.kind is SetKind.SIMPLEX:
            return bool(np.all(v >= -tol) and abs(v.sum() - 1.0) <= tol)
        if self.kind is SetKind.BOX:
            return bool(np.all(v >= self.lo - tol) and np.all(v <= self.hi + tol))
        return bool(np.all(np.isfinite(v)))

    def indicator(self, v: Vector) -> float:
        return 0.0 if self.contains(v) else np.inf

    def normal_cone_distance(self, x: Vector, g: Vector) -> float:
        return normal_cone_distance(self.kind, x, g, lo=self.lo, hi=self.hi)

    def sample(self, rng: np.random.Generator, dim: int) -> Vector:
        if self.kind is SetKind.SIMPLEX:
            return rng.dirichlet(np.ones(dim))
        if self.kind is SetKind.BOX:
            return rng.uniform(self.lo, self.hi, size=dim)
        return rng.standard_normal(dim)

    def diameter(self, dim: int) -> float:
        if self.kind is SetKind.SIMPLEX:
            return float(np.sqrt(2.0)) if dim > 1 else 0.0
        if self.kind is SetKind.BOX:
            return float((self.hi - self.lo) * np.sqrt(dim))
        return np.inf


# ---------------------------------------------------------------------------
# Oracle accounting
# ---------------------------------------------------------------------------


@dataclass
class OracleTally:
    """Per-category oracle counters; `total` is the bundled oracle-call count."""

    counts: dict[str, int] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def hit(self, name: str, n: int = 1) -> None:
        with self._lock:
            self.counts[name] = self.counts.get(name, 0) + n

    def wrap(self, name: str, fn: Callable[..., Any]) -> Callable[..., Any]:
        def counted_fn(*args: Any, **kwargs: Any) -> Any:
            self.hit(name)
            return fn(*args, **kwargs)

        return counted_fn

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)


# ---------------------------------------------------------------------------
# Problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MinMaxProblem:
    """Oracles and constants of a nonconvex-concave composite min-max problem.

    h_resolvent(lam, x0) = argmin { lam*h(x) + 1/2 ||x - x0||^2 };
    y_resolvent(lam, x, y0) = argmax_{y in Y} { lam*Phi(x, y) - 1/2 ||y - y0||^2 }.
    """

    phi_value: PhiValue
    grad_x_phi: PhiGrad
    h_resolvent: Resolvent
    y_resolvent: YResolvent
    h_value: HValue
    m: float
    L_x: float
    L_y: float
    D_y: float
    dims: tuple[int, int]
    x_set: SetSpec = field(default_factory=SetSpec.free)
    y_set: SetSpec = field(default_factory=SetSpec.free)
    grad_y_phi: PhiGrad | None = None
    family: str = "custom"

    def __post_init__(self) -> None:
        if self.m <= 0 or self.L_x <= 0:
            raise InvalidCurvature(f"m and L_x must be positive (m={self.m}, L_x={self.L_x})")
        if self.m > self.L_x * (1.0 + 1e-12):
            raise InvalidCurvature(f"m ({self.m}) must not exceed L_x ({self.L_x})")
        if self.L_y < 0 or self.D_y < 0:
            raise ValueError(f"L_y and D_y must be nonnegative (L_y={self.L_y}, D_y={self.D_y})")

    @property
    def n_x(self) -> int:
        return self.dims[0]

    @property
    def n_y(self) -> int:
        return self.dims[1]

    def counted(self) -> tuple[MinMaxProblem, OracleTally]:
        """Copy whose oracles increment a fresh tally."""
        tally = OracleTally()
        wrapped = dataclasses.replace(
            self,
            phi_value=tally.wrap("phi", self.phi_value),
            grad_x_phi=tally.wrap("grad_x", self.grad_x_phi),
            h_resolvent=tally.wrap("h_resolvent", self.h_resolvent),
            y_resolvent=tally.wrap("y_resolvent", self.y_resolvent),
            h_value=tally.wrap("h", self.h_value),
            grad_y_phi=None if self.grad_y_phi is None else tally.wrap("grad_y", self.grad_y_phi),
        )
        return wrapped, tally

    def require_grad_y(self) -> PhiGrad:
        if self.grad_y_phi is None:
            raise Unsupported(f"{self.family}: no grad_y_phi oracle")
        return self.grad_y_phi


@dataclass(frozen=True)
class InvariantReport:
    """Worst slacks observed by `check_invariants` (positive means violated)."""

    lipschitz_excess: float
    curvature_excess: float
    y_outside: int
    samples: int

    @property
    def ok(self) -> bool:
        return self.lipschitz_excess <= 0.0 and self.curvature_excess <= 0.0 and self.y_outside == 0


def check_invariants(
    problem: MinMaxProblem,
    rng: np.random.Generator,
    *,
    samples: int = 200,
    tol: float = 1e-8,
    resolvent_lambda: float = 1.0,
) -> InvariantReport:
    """Sample the Lipschitz, weak-convexity and y-membership invariants of a problem."""
    n_x, n_y = problem.dims
    worst_lip = -np.inf
    worst_curv = -np.inf
    outside = 0
    for _ in range(samples):
        x = problem.x_set.sample(rng, n_x)
        xp = problem.x_set.sample(rng, n_x)
        y = problem.y_set.sample(rng, n_y)
        gx = problem.grad_x_phi(x, y)
        gxp = problem.grad_x_phi(xp, y)
        dist = float(np.linalg.norm(x - xp))
        scale = max(1.0, abs(problem.phi_value(x, y)))
        worst_lip = max(worst_lip, float(np.linalg.norm(gx - gxp)) - problem.L_x * dist - tol * scale)
        lower = problem.phi_value(x, y) - problem.phi_value(xp, y) - float(gxp @ (x - xp))
        worst_curv = max(worst_curv, -(problem.m / 2.0) * dist**2 - lower - tol * scale)
        y0 = rng.standard_normal(n_y)
        if not problem.y_set.contains(problem.y_resolvent(resolvent_lambda, x, y0)):
            outside += 1
    return InvariantReport(
        lipschitz_excess=float(worst_lip),
        curvature_excess=float(worst_curv),
        y_outside=outside,
        samples=samples,
    )
