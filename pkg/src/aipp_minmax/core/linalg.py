"""Projections, operator norms and normal-cone distances used by every solver."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .errors import DimensionError
from .schemas import SetKind, Vector

logger = logging.getLogger(__name__)


def _as_vector(v: Any) -> Vector:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise DimensionError("expected a non-empty vector")
    return arr


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


def project_simplex(v: Any) -> Vector:
    """Euclidean projection onto the unit simplex {w >= 0, sum(w) = 1}.

    Sort-based thresholding: theta is the largest valid threshold, so ties resolve the same
    way on every platform.
    """
    v = _as_vector(v)
    if not np.all(np.isfinite(v)):
        raise ValueError("project_simplex: input contains non-finite values")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    valid = u - css / ind > 0
    rho = ind[valid][-1]
    theta = css[valid][-1] / rho
    return np.maximum(v - theta, 0.0)


def project_box(v: Any, lo: float, hi: float) -> Vector:
    if lo > hi:
        raise ValueError(f"project_box: lo ({lo}) > hi ({hi})")
    return np.clip(np.asarray(v, dtype=float), lo, hi)


# ---------------------------------------------------------------------------
# Operator norm
# ---------------------------------------------------------------------------


def operator_norm(
    A: Any,
    tol: float = 1e-8,
    *,
    max_iter: int = 100_000,
    seed: int = 0,
) -> float:
    """Largest singular value of A by power iteration on A*A.

    A may be a dense array, a scipy sparse matrix or a LinearOperator. Iteration stops once the
    Rayleigh residual ||A*A x - s^2 x|| drops below tol * s^2.
    """
    op: LinearOperator = aslinearoperator(A)
    n = op.shape[1]
    if n == 0 or op.shape[0] == 0:
        raise DimensionError("operator_norm: empty operator")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    sigma_sq = 0.0
    for _ in range(max_iter):
        w = op.rmatvec(op.matvec(x))
        sigma_sq = float(x @ w)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            # x fell into the null space; restart from a fresh direction once
            x = rng.standard_normal(n)
            x /= np.linalg.norm(x)
            w = op.rmatvec(op.matvec(x))
            sigma_sq = float(x @ w)
            norm_w = float(np.linalg.norm(w))
            if norm_w == 0.0:
                raise ValueError("operator_norm: the operator is identically zero")
        residual = float(np.linalg.norm(w - sigma_sq * x))
        if residual <= tol * sigma_sq:
            return float(np.sqrt(sigma_sq))
        x = w / norm_w
    logger.warning("operator_norm: power iteration hit max_iter=%d", max_iter)
    return float(np.sqrt(sigma_sq))


# ---------------------------------------------------------------------------
# Normal cones
# ---------------------------------------------------------------------------


def _box_cone_distance(x: Vector, g: Vector, lo: float, hi: float, atol: float) -> float:
    at_lo = x <= lo + atol
    at_hi = x >= hi - atol
    comp = np.abs(g)
    # at the lower face the cone is (-inf, 0]; at the upper face [0, inf)
    comp = np.where(at_lo & ~at_hi, np.maximum(-g, 0.0), comp)
    comp = np.where(at_hi & ~at_lo, np.maximum(g, 0.0), comp)
    comp = np.where(at_lo & at_hi, 0.0, comp)
    return float(np.linalg.norm(comp))


def _simplex_cone_distance(x: Vector, g: Vector, atol: float) -> float:
    # N(x) = {t*1 - s : s >= 0, s_i = 0 on the support}; off the support only g_i + t < 0 costs
    support = x > atol
    gs = g[support]
    gz = np.sort(g[~support])
    base_sum = gs.sum()
    base_cnt = gs.size
    csum = np.concatenate(([0.0], np.cumsum(gz)))
    t = -base_sum / base_cnt
    for k in range(gz.size + 1):
        t = -(base_sum + csum[k]) / (base_cnt + k)
        active_ok = k == 0 or gz[k - 1] + t <= 0.0
        inactive_ok = k == gz.size or gz[k] + t >= 0.0
        if active_ok and inactive_ok:
            break
    val = np.sum((gs + t) ** 2) + np.sum(np.minimum(gz + t, 0.0) ** 2)
    return float(np.sqrt(val))


def normal_cone_distance(
    set_kind: SetKind | str,
    x: Any,
    g: Any,
    *,
    lo: float = 0.0,
    hi: float = 1.0,
    tol: float = 1e-9,
    atol: float = 1e-12,
) -> float:
    """dist(0, g + N_C(x)) for C a simplex, a box [lo, hi]^n or the whole space."""
    kind = SetKind(set_kind)
    x = _as_vector(x)
    g = _as_vector(g)
    if x.shape != g.shape:
        raise DimensionError(f"normal_cone_distance: x has shape {x.shape}, g has {g.shape}")
    if kind is SetKind.FREE:
        return float(np.linalg.norm(g))
    if kind is SetKind.BOX:
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            raise ValueError("normal_cone_distance: x lies outside the box")
        return _box_cone_distance(x, g, lo, hi, atol)
    if np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ValueError("normal_cone_distance: x lies outside the simplex")
    return _simplex_cone_distance(x, g, atol)
