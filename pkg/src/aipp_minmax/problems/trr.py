"""
Truncated robust regression (TRR).

    min_{x in R^k} max_{y in simplex_n} sum_j y_j phi_alpha(l_j(x)),
    l_j(x) = log(1 + exp(-b_j <a_j, x>)),   phi_alpha(t) = alpha log(1 + t/alpha).

phi_alpha truncates the logistic loss, which makes every term nonconvex with curvature bounded
below by -||a_j||^2 / alpha.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from ..core.errors import DimensionError
from ..core.problem import MinMaxProblem, SetSpec
from ..core.schemas import Vector
from .libsvm import read_libsvm

logger = logging.getLogger(__name__)

FAMILY = "trr"
DEFAULT_ALPHA = 10.0


def truncated(t: Vector, alpha: float) -> Vector:
    """phi_alpha(t) = alpha log(1 + t/alpha)."""
    return alpha * np.log1p(t / alpha)


@dataclass(frozen=True, eq=False)
class TrrInstance:
    features: sp.csr_matrix  # n x k, rows a_j
    labels: Vector
    alpha: float = DEFAULT_ALPHA
    source: str = ""
    family: str = field(default=FAMILY, init=False)

    def __post_init__(self) -> None:
        features = sp.csr_matrix(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=float)
        if features.shape[0] != labels.size:
            raise DimensionError(f"{features.shape[0]} feature rows but {labels.size} labels")
        if features.shape[0] == 0:
            raise DimensionError("TRR needs at least one sample")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("TRR labels must lie in {-1, +1}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        """Number of samples (dimension of y)."""
        return self.features.shape[0]

    @property
    def k(self) -> int:
        """Number of features (dimension of x)."""
        return self.features.shape[1]

    @cached_property
    def row_norms_sq(self) -> Vector:
        return np.asarray(self.features.multiply(self.features).sum(axis=1)).ravel()

    def margins(self, x: Vector) -> Vector:
        return -self.labels * (self.features @ x)

    def logistic(self, x: Vector) -> Vector:
        """l_j(x) for every sample."""
        return np.logaddexp(0.0, self.margins(x))

    def losses(self, x: Vector) -> Vector:
        return truncated(self.logistic(x), self.alpha)

    def tau(self, x: Vector) -> Vector:
        """tau_j(x) = sigmoid(-b_j <a_j, x>) / (alpha + l_j(x)); |tau_j| <= 1/alpha."""
        z = self.margins(x)
        return expit(z) / (self.alpha + np.logaddexp(0.0, z))

    def phi_value(self, x: Vector, y: Vector) -> float:
        return float(y @ self.losses(x))

    def grad_x_phi(self, x: Vector, y: Vector) -> Vector:
        return -self.alpha * (self.features.T @ (y * self.labels * self.tau(x)))

    def grad_y_phi(self, x: Vector, y: Vector) -> Vector:
        return self.losses(x)

    def y_resolvent(self, lam: float, x: Vector, y0: Vector) -> Vector:
        # losses evaluated once per call
        loss = self.losses(x)
        return SetSpec.simplex().project(y0 + lam * loss)

    def max_value(self, x: Vector) -> float:
        return float(np.max(self.losses(x)))

    def default_start(self) -> Vector:
        return np.zeros(self.k)

    def constants(self) -> tuple[float, float, float]:
        """(m, L_x, L_y).

        m = max||a_j||^2 / alpha bounds the negative curvature; the positive curvature of
        phi_alpha o l_j reaches ||a_j||^2 / 4, so L_x = max{1/4, 1/alpha} max||a_j||^2.
        """
        top = float(np.max(self.row_norms_sq))
        scale = top if top > 0 else 1.0
        m = scale / self.alpha
        L_x = max(0.25, 1.0 / self.alpha) * scale
        L_y = math.sqrt(float(np.sum(self.row_norms_sq)))
        return m, L_x, L_y

    @cached_property
    def problem(self) -> MinMaxProblem:
        m, L_x, L_y = self.constants()
        free, simplex = SetSpec.free(), SetSpec.simplex()
        return MinMaxProblem(
            phi_value=self.phi_value,
            grad_x_phi=self.grad_x_phi,
            h_resolvent=lambda lam, x: np.array(x, dtype=float),
            y_resolvent=self.y_resolvent,
            h_value=lambda x: 0.0,
            m=m,
            L_x=L_x,
            L_y=L_y,
            D_y=simplex.diameter(self.n),
            dims=(self.k, self.n),
            x_set=free,
            y_set=simplex,
            grad_y_phi=self.grad_y_phi,
            family=FAMILY,
        )

    def header(self) -> dict[str, Any]:
        return {"family": FAMILY, "dims": [self.n, self.k], "alpha": self.alpha, "source": self.source}

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "data": self.features.data,
            "indices": self.features.indices,
            "indptr": self.features.indptr,
            "labels": self.labels,
        }

    @classmethod
    def from_arrays(cls, header: dict[str, Any], arrays: dict[str, np.ndarray]) -> TrrInstance:
        n, k = header["dims"]
        features = sp.csr_matrix((arrays["data"], arrays["indices"], arrays["indptr"]), shape=(n, k))
        return cls(features, arrays["labels"], float(header["alpha"]), str(header.get("source", "")))


def trr_load(path: str | Path, alpha: float = DEFAULT_ALPHA, n_features: int | None = None) -> TrrInstance:
    """TRR instance from a LIBSVM file (labels normalized to +-1)."""
    features, labels = read_libsvm(path, n_features)
    logger.info("loaded TRR data %s: %d samples, %d features", path, *features.shape)
    return TrrInstance(features, labels, alpha, source=str(path))
