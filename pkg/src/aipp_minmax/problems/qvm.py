"""
Quadratic vector min-max (QVM) instances.

    min_{x in simplex_n} max_{i <= k} g_i(x),
    g_i(x) = alpha_i/2 ||C_i x - d_i||^2 - beta_i/2 ||D_i B_i x||^2

written as Phi(x, y) = sum_i y_i g_i(x) over y in simplex_k. alpha_i and beta_i are calibrated so
that the Hessian Q_i of every g_i has largest eigenvalue M_target and smallest -m_target.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh
from scipy.optimize import brentq

from ..core.errors import CalibrationError, DimensionError
from ..core.problem import MinMaxProblem, SetSpec
from ..core.schemas import Vector
from ..solvers.qp_aipp import LinearConstraint

logger = logging.getLogger(__name__)

FAMILY = "qvm"
CALIBRATION_ROUNDS = 100
CALIBRATION_RTOL = 0.01
_BRACKET_DOUBLINGS = 200


# ---------------------------------------------------------------------------
# Random data
# ---------------------------------------------------------------------------


def _sparse_uniform(rows: int, cols: int, density: float, gen: np.random.Generator) -> sp.csr_matrix:
    """U[0,1] sparse matrix in which every row holds at least one nonzero."""
    mat = sp.random(rows, cols, density, "csr", np.float64, gen).tocsr()
    empty = np.flatnonzero(np.diff(mat.indptr) == 0)
    if empty.size:
        extra = sp.csr_matrix(
            (gen.uniform(0.0, 1.0, empty.size), (empty, gen.integers(0, cols, empty.size))),
            shape=(rows, cols),
        )
        mat = (mat + extra).tocsr()
    return mat


def _lambda_max(H: np.ndarray) -> float:
    n = H.shape[0]
    return float(eigvalsh(H, subset_by_index=[n - 1, n - 1])[0])


def _lambda_min(H: np.ndarray) -> float:
    return float(eigvalsh(H, subset_by_index=[0, 0])[0])


def _bracket_root(fn: Any, hi: float) -> float:
    """Upper end b with fn(b) > 0 for an increasing fn with fn(0) < 0."""
    for _ in range(_BRACKET_DOUBLINGS):
        if fn(hi) > 0.0:
            return hi
        hi *= 2.0
    raise CalibrationError("could not bracket the calibration root")


def calibrate(G: np.ndarray, K: np.ndarray, M: float, m: float) -> tuple[float, float]:
    """(alpha, beta) with lambda_max(alpha G - beta K) = M and lambda_min = -m.

    Alternates one-dimensional root finds: alpha with beta fixed for the top eigenvalue, then
    beta with alpha fixed for the bottom one, until both land within 1% of their targets.
    """
    alpha, beta = 1.0, 0.0
    for rounds in range(1, CALIBRATION_ROUNDS + 1):

        def top(a: float, b: float = beta) -> float:
            return _lambda_max(a * G - b * K) - M

        alpha = brentq(top, 0.0, _bracket_root(top, max(alpha, 1.0)), xtol=1e-14, rtol=1e-12)

        def bottom(b: float, a: float = alpha) -> float:
            return -_lambda_min(a * G - b * K) - m

        beta = brentq(bottom, 0.0, _bracket_root(bottom, max(beta, 1.0)), xtol=1e-14, rtol=1e-12)

        H = alpha * G - beta * K
        lmax, lmin = _lambda_max(H), _lambda_min(H)
        if abs(lmax - M) <= CALIBRATION_RTOL * M and abs(lmin + m) <= CALIBRATION_RTOL * m:
            logger.debug("QVM calibration converged in %d rounds (alpha=%.4e beta=%.4e)", rounds, alpha, beta)
            return alpha, beta
    raise CalibrationError(f"curvature calibration did not reach 1% accuracy in {CALIBRATION_ROUNDS} rounds")


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QvmInstance:
    n: int
    l: int  # noqa: E741
    k: int
    alpha: Vector
    beta: Vector
    C: tuple[sp.csr_matrix, ...]
    B: tuple[sp.csr_matrix, ...]
    D: np.ndarray  # k x n diagonals
    d: np.ndarray  # k x l
    M_target: float
    m_target: float
    density: float
    seed: int
    Q: np.ndarray = field(init=False, repr=False)
    q: np.ndarray = field(init=False, repr=False)
    c: Vector = field(init=False, repr=False)
    # (m, L_x) measured from the calibrated Hessians
    curvature: tuple[float, float] = field(init=False, repr=False)

    family: str = field(default=FAMILY, init=False)

    def __post_init__(self) -> None:
        Q = np.empty((self.k, self.n, self.n))
        q = np.empty((self.k, self.n))
        c = np.empty(self.k)
        for i in range(self.k):
            Ci = self.C[i].toarray()
            DBi = self.D[i][:, None] * self.B[i].toarray()
            Q[i] = self.alpha[i] * Ci.T @ Ci - self.beta[i] * DBi.T @ DBi
            q[i] = -self.alpha[i] * Ci.T @ self.d[i]
            c[i] = 0.5 * self.alpha[i] * float(self.d[i] @ self.d[i])
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "c", c)
        spectrum = [(_lambda_min(Qi), _lambda_max(Qi)) for Qi in Q]
        m = max(max(-lo for lo, _ in spectrum), np.finfo(float).tiny)
        L_x = max(max(hi for _, hi in spectrum), m)
        object.__setattr__(self, "curvature", (float(m), float(L_x)))

    @property
    def P(self) -> np.ndarray:
        """n x k matrix whose columns are alpha_i C_i^T d_i."""
        return -self.q.T

    def g(self, x: Vector) -> Vector:
        """Stacked (g_1(x), ..., g_k(x))."""
        Qx = self.Q @ x
        return 0.5 * (Qx @ x) + self.q @ x + self.c

    def g_grads(self, x: Vector) -> np.ndarray:
        """k x n matrix of gradients Q_i x + q_i."""
        return self.Q @ x + self.q

    def phi_value(self, x: Vector, y: Vector) -> float:
        return float(y @ self.g(x))

    def grad_x_phi(self, x: Vector, y: Vector) -> Vector:
        return y @ self.g_grads(x)

    def grad_y_phi(self, x: Vector, y: Vector) -> Vector:
        return self.g(x)

    def y_resolvent(self, lam: float, x: Vector, y0: Vector) -> Vector:
        return SetSpec.simplex().project(y0 + lam * self.g(x))

    def max_value(self, x: Vector) -> float:
        """p(x) = max_i g_i(x)."""
        return float(np.max(self.g(x)))

    def hessian_spectrum(self) -> list[tuple[float, float]]:
        return [(_lambda_min(Qi), _lambda_max(Qi)) for Qi in self.Q]

    def default_start(self) -> Vector:
        return np.full(self.n, 1.0 / self.n)

    @cached_property
    def problem(self) -> MinMaxProblem:
        simplex = SetSpec.simplex()
        L_y = self.curvature[1] * math.sqrt(self.k) + float(np.linalg.norm(self.P, 2))
        return MinMaxProblem(
            phi_value=self.phi_value,
            grad_x_phi=self.grad_x_phi,
            h_resolvent=lambda lam, x: simplex.project(x),
            y_resolvent=self.y_resolvent,
            h_value=simplex.indicator,
            m=self.curvature[0],
            L_x=self.curvature[1],
            L_y=L_y,
            D_y=simplex.diameter(self.k),
            dims=(self.n, self.k),
            x_set=simplex,
            y_set=simplex,
            grad_y_phi=self.grad_y_phi,
            family=FAMILY,
        )

    # storage

    def header(self) -> dict[str, Any]:
        return {
            "family": FAMILY,
            "dims": [self.n, self.l, self.k],
            "seed": self.seed,
            "density": self.density,
            "M_target": self.M_target,
            "m_target": self.m_target,
        }

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "C": np.stack([Ci.toarray() for Ci in self.C]),
            "B": np.stack([Bi.toarray() for Bi in self.B]),
            "D": self.D,
            "d": self.d,
        }

    @classmethod
    def from_arrays(cls, header: dict[str, Any], arrays: dict[str, np.ndarray]) -> QvmInstance:
        n, l, k = header["dims"]
        return cls(
            n=n,
            l=l,
            k=k,
            alpha=arrays["alpha"],
            beta=arrays["beta"],
            C=tuple(sp.csr_matrix(Ci) for Ci in arrays["C"]),
            B=tuple(sp.csr_matrix(Bi) for Bi in arrays["B"]),
            D=arrays["D"],
            d=arrays["d"],
            M_target=float(header["M_target"]),
            m_target=float(header["m_target"]),
            density=float(header["density"]),
            seed=int(header["seed"]),
        )


def qvm_generate(
    n: int,
    l: int,  # noqa: E741
    k: int,
    M_target: float,
    m_target: float,
    density: float = 0.05,
    seed: int = 0,
) -> QvmInstance:
    """Seeded QVM instance; each (C_i, B_i, D_i, d_i) draws from its own PCG64 child stream."""
    if min(n, l, k) < 1:
        raise DimensionError(f"QVM dimensions must be positive, got (n, l, k)=({n}, {l}, {k})")
    if not 0.0 < m_target <= M_target:
        raise ValueError(f"need 0 < m_target <= M_target, got m={m_target}, M={M_target}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")

    streams = np.random.SeedSequence(seed).spawn(k)
    alpha = np.empty(k)
    beta = np.empty(k)
    C: list[sp.csr_matrix] = []
    B: list[sp.csr_matrix] = []
    D = np.empty((k, n))
    d = np.empty((k, l))
    for i, stream in enumerate(streams):
        c_ss, b_ss, dd_ss, d_ss = stream.spawn(4)
        C.append(_sparse_uniform(l, n, density, np.random.Generator(np.random.PCG64(c_ss))))
        B.append(_sparse_uniform(n, n, density, np.random.Generator(np.random.PCG64(b_ss))))
        D[i] = np.random.Generator(np.random.PCG64(dd_ss)).uniform(1.0, 1000.0, n)
        d[i] = np.random.Generator(np.random.PCG64(d_ss)).uniform(0.0, 1.0, l)
        Ci = C[i].toarray()
        DBi = D[i][:, None] * B[i].toarray()
        alpha[i], beta[i] = calibrate(Ci.T @ Ci, DBi.T @ DBi, M_target, m_target)
    logger.info("generated QVM n=%d l=%d k=%d (M=%g, m=%g) seed=%d", n, l, k, M_target, m_target, seed)
    return QvmInstance(
        n=n,
        l=l,
        k=k,
        alpha=alpha,
        beta=beta,
        C=tuple(C),
        B=tuple(B),
        D=D,
        d=d,
        M_target=float(M_target),
        m_target=float(m_target),
        density=float(density),
        seed=seed,
    )


def qvm_constraint(instance: QvmInstance, rows: int, seed: int = 0) -> LinearConstraint:
    """Random Gaussian rows x n system Ax = b made feasible by a random simplex point."""
    if rows < 1:
        raise ValueError(f"rows must be positive, got {rows}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, instance.seed, rows]))
    A = rng.standard_normal((rows, instance.n))
    b = A @ rng.dirichlet(np.ones(instance.n))
    return LinearConstraint.from_matrix(A, b)
