"""
Power control (PC) over N channels shared by K users.

    min_{0 <= X <= R} max_{0 <= y <= N/2} sum_{k,n} f_{k,n}(X, y),
    f_{k,n} = -log(1 + A_{k,k,n} X_{k,n} / S^-_{k,n}),
    S^-_{k,n} = sigma^2 + B_{k,n} y_n + sum_{j != k} A_{j,k,n} X_{j,n}.

A[j, k, n] is the gain from user j to receiver k on channel n. X is stored row-major as a
length K*N vector. Phi is concave and nondecreasing in each y_n, so the y-resolvent decouples
into N monotone scalar equations solved by bisection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from ..core.errors import DimensionError
from ..core.problem import MinMaxProblem, SetSpec
from ..core.schemas import Vector

logger = logging.getLogger(__name__)

FAMILY = "pc"
BISECTION_WIDTH = 1e-12
_MAX_BISECTIONS = 200


def complex_gain(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """|h|^2 for h ~ CN(0, 1): real and imaginary parts are i.i.d. N(0, 1/2)."""
    scale = np.sqrt(0.5)
    re = rng.normal(0.0, scale, shape)
    im = rng.normal(0.0, scale, shape)
    return re * re + im * im


@dataclass(frozen=True, eq=False)
class PcInstance:
    N: int
    K: int
    A: np.ndarray  # K x K x N
    B: np.ndarray  # K x N
    seed: int = 0
    sigma: float = float(np.sqrt(0.5))
    R: float = field(init=False)
    family: str = field(default=FAMILY, init=False)

    def __post_init__(self) -> None:
        if min(self.N, self.K) < 1:
            raise DimensionError(f"PC dimensions must be positive, got N={self.N}, K={self.K}")
        if self.A.shape != (self.K, self.K, self.N) or self.B.shape != (self.K, self.N):
            raise DimensionError(f"gain shapes {self.A.shape}, {self.B.shape} do not match (K, N)=({self.K}, {self.N})")
        object.__setattr__(self, "R", float(self.K ** (1.0 / self.K)))

    @property
    def y_max(self) -> float:
        return self.N / 2.0

    @cached_property
    def diag(self) -> np.ndarray:
        """A[k, k, n] as a K x N matrix."""
        return np.einsum("kkn->kn", self.A)

    def _mat(self, x: Vector) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(self.K, self.N)

    def interference(self, X: np.ndarray, y: Vector) -> tuple[np.ndarray, np.ndarray]:
        """(S^-, S) as K x N matrices."""
        received = np.einsum("jkn,jn->kn", self.A, X)
        own = self.diag * X
        s_minus = self.sigma**2 + self.B * y[None, :] + received - own
        return s_minus, s_minus + own

    def _weights(self, X: np.ndarray, y: Vector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s_minus, s = self.interference(X, y)
        return s_minus, s, self.diag * X / (s * s_minus)

    def phi_value(self, x: Vector, y: Vector) -> float:
        X = self._mat(x)
        s_minus, _ = self.interference(X, y)
        return float(-np.sum(np.log1p(self.diag * X / s_minus)))

    def grad_x_phi(self, x: Vector, y: Vector) -> Vector:
        X = self._mat(x)
        _, s, W = self._weights(X, y)
        grad = -self.diag / s + np.einsum("kjn,jn->kn", self.A, W) - self.diag * W
        return grad.ravel()

    def grad_y_phi(self, x: Vector, y: Vector) -> Vector:
        X = self._mat(x)
        _, _, W = self._weights(X, y)
        return np.sum(self.B * W, axis=0)

    def y_resolvent(self, lam: float, x: Vector, y0: Vector) -> Vector:
        return pc_y_resolvent(self, lam, x, y0)

    def max_value(self, x: Vector) -> float:
        """p(X) = Phi(X, (N/2) 1) since Phi is nondecreasing in y."""
        return self.phi_value(x, np.full(self.N, self.y_max))

    def default_start(self) -> Vector:
        return np.zeros(self.K * self.N)

    def constants(self) -> tuple[float, float]:
        """(L_x = m, L_y), both scaled by 2 / min{sigma^4, sigma^6}."""
        factor = 2.0 / min(self.sigma**4, self.sigma**6)
        L_x = factor * float(np.max(np.einsum("kjn,kjn->kn", self.A, self.A)))
        L_y = factor * float(np.max(np.einsum("jn,kjn->kn", self.B, self.A)))
        return L_x, L_y

    @cached_property
    def problem(self) -> MinMaxProblem:
        L_x, L_y = self.constants()
        x_box = SetSpec.box(0.0, self.R)
        y_box = SetSpec.box(0.0, self.y_max)
        return MinMaxProblem(
            phi_value=self.phi_value,
            grad_x_phi=self.grad_x_phi,
            h_resolvent=lambda lam, x: x_box.project(x),
            y_resolvent=self.y_resolvent,
            h_value=x_box.indicator,
            m=L_x,
            L_x=L_x,
            L_y=L_y,
            D_y=y_box.diameter(self.N),
            dims=(self.K * self.N, self.N),
            x_set=x_box,
            y_set=y_box,
            grad_y_phi=self.grad_y_phi,
            family=FAMILY,
        )

    def header(self) -> dict[str, Any]:
        return {"family": FAMILY, "dims": [self.N, self.K], "seed": self.seed, "sigma": self.sigma}

    def arrays(self) -> dict[str, np.ndarray]:
        return {"A": self.A, "B": self.B}

    @classmethod
    def from_arrays(cls, header: dict[str, Any], arrays: dict[str, np.ndarray]) -> PcInstance:
        N, K = header["dims"]
        return cls(N, K, arrays["A"], arrays["B"], int(header["seed"]), float(header["sigma"]))


def pc_generate(N: int, K: int, seed: int = 0) -> PcInstance:
    if min(N, K) < 1:
        raise DimensionError(f"PC dimensions must be positive, got N={N}, K={K}")
    a_ss, b_ss = np.random.SeedSequence(seed).spawn(2)
    A = complex_gain(np.random.Generator(np.random.PCG64(a_ss)), (K, K, N))
    B = complex_gain(np.random.Generator(np.random.PCG64(b_ss)), (K, N))
    logger.info("generated PC N=%d K=%d seed=%d", N, K, seed)
    return PcInstance(N, K, A, B, seed)


def pc_y_resolvent(instance: PcInstance, lam: float, x: Vector, y0: Vector) -> Vector:
    """argmax_{0 <= y <= N/2} lam Phi(X, y) - 1/2 ||y - y0||^2 by per-channel bisection.

    F_n(y) = sum_k B_{k,n} W_{k,n}(y) - (y_n - y0_n)/lam is decreasing; channels with
    F_n(0) <= 0 clamp to 0 and those with F_n(N/2) >= 0 clamp to N/2.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    X = instance._mat(x)
    y0 = np.asarray(y0, dtype=float)

    def F(y: Vector) -> Vector:
        _, _, W = instance._weights(X, y)
        return np.sum(instance.B * W, axis=0) - (y - y0) / lam

    lo = np.zeros(instance.N)
    hi = np.full(instance.N, instance.y_max)
    f_lo, f_hi = F(lo), F(hi)
    at_lo = f_lo <= 0.0
    at_hi = f_hi >= 0.0
    for _ in range(_MAX_BISECTIONS):
        if np.all(hi - lo <= BISECTION_WIDTH):
            break
        mid = 0.5 * (lo + hi)
        positive = F(mid) > 0.0
        lo = np.where(positive, mid, lo)
        hi = np.where(positive, hi, mid)
    root = 0.5 * (lo + hi)
    return np.where(at_lo, 0.0, np.where(at_hi, instance.y_max, root))
