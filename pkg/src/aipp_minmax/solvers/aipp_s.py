"""
AIPP-S: smooth the max function with xi = D_y / rho_y and run AIPP (or R-AIPP) on
p_xi + h, then read the dual residual off the smoothing anchor.

Also hosts the conversions between stationarity notions: primal-dual certificates to
near-directional bounds, prox-stationarity thresholds and first-order Nash residuals.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from enum import Enum
from typing import Literal

import numpy as np

from ..core.errors import SolverInterrupted, Unsupported
from ..core.problem import MinMaxProblem, OracleTally
from ..core.schemas import DirectionalCertificate, SetKind, SolveReport, StationaryCertificate, Vector
from ..smoothing import SmoothedObjective
from .aipp import AippConfig, AippResult, aipp_solve
from .raipp import RaippConfig, raipp_solve

logger = logging.getLogger(__name__)

InnerMethod = Literal["aipp", "raipp"]


class ProxDirection(str, Enum):
    DELTA_TO_EPS = "DeltaToEps"
    EPS_TO_DELTA = "EpsToDelta"


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def smoothing_parameter(D_y: float, rho_y: float) -> float:
    """Smallest admissible xi = D_y / rho_y; a singleton Y (D_y = 0) needs no smoothing, xi = 1."""
    if not rho_y > 0:
        raise ValueError(f"rho_y must be positive, got {rho_y}")
    return D_y / rho_y if D_y > 0 else 1.0


def relative_scale(smoothed: SmoothedObjective, x0: Vector) -> float:
    """||grad p_xi(x0)|| + 1, the scale of the relative stopping test."""
    return float(np.linalg.norm(smoothed.grad_p_xi(x0))) + 1.0


def check_inner_config(inner: InnerMethod, config: AippConfig | RaippConfig | None) -> None:
    expected = RaippConfig if inner == "raipp" else AippConfig
    if config is not None and not isinstance(config, expected):
        raise ValueError(f"inner={inner!r} expects {expected.__name__}, got {type(config).__name__}")


def _run_inner(
    problem: MinMaxProblem,
    smoothed: SmoothedObjective,
    x0: Vector,
    rho_bar: float,
    inner: InnerMethod,
    config: AippConfig | RaippConfig | None,
    tally: OracleTally,
) -> AippResult:
    check_inner_config(inner, config)
    if inner == "raipp":
        raipp_config = config if isinstance(config, RaippConfig) else RaippConfig()
        return raipp_solve(
            smoothed.p_xi_value,
            smoothed.grad_p_xi,
            problem.h_value,
            problem.h_resolvent,
            problem.m,
            smoothed.L_xi,
            x0,
            rho_bar,
            raipp_config,
            tally=tally,
        )
    if isinstance(config, AippConfig):
        aipp_config = dataclasses.replace(config, rho_bar=rho_bar)
    else:
        aipp_config = AippConfig.default(problem.m, rho_bar)
    return aipp_solve(
        smoothed.p_xi_value,
        smoothed.grad_p_xi,
        problem.h_value,
        problem.h_resolvent,
        problem.m,
        smoothed.L_xi,
        aipp_config,
        x0,
        tally=tally,
    )


def certificate_from_point(smoothed: SmoothedObjective, x_bar: Vector, u_bar: Vector) -> StationaryCertificate:
    y_bar, v_bar = smoothed.dual_residual(x_bar)
    return StationaryCertificate.from_vectors(u_bar, v_bar, x_bar, y_bar)


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def solve_primal_dual(
    problem: MinMaxProblem,
    rho_x: float,
    rho_y: float,
    x0: Vector,
    y0: Vector | None = None,
    *,
    xi: float | None = None,
    relative: bool = False,
    inner: InnerMethod = "aipp",
    config: AippConfig | RaippConfig | None = None,
) -> tuple[StationaryCertificate, SolveReport]:
    """(rho_x, rho_y)-primal-dual stationary quadruple of the min-max problem.

    With `relative=True` the x-residual target becomes rho_x * (||grad p_xi(x0)|| + 1).
    On interruption the raised error carries a certificate built at the last iterate.
    """
    if not rho_x > 0:
        raise ValueError(f"rho_x must be positive, got {rho_x}")
    counted, tally = problem.counted()
    if xi is None:
        xi = smoothing_parameter(problem.D_y, rho_y)
    y0 = np.zeros(problem.n_y) if y0 is None else np.asarray(y0, dtype=float)
    smoothed = SmoothedObjective(counted, xi, y0)
    x0 = np.asarray(x0, dtype=float)
    rho_bar = rho_x * relative_scale(smoothed, x0) if relative else rho_x
    logger.info(
        "AIPP-S (%s): family=%s xi=%.3e L_xi=%.3e rho_bar=%.3e", inner, problem.family, xi, smoothed.L_xi, rho_bar
    )
    try:
        x_bar, u_bar, report = _run_inner(counted, smoothed, x0, rho_bar, inner, config, tally)
    except SolverInterrupted as exc:
        if exc.x is not None:
            x_last = problem.h_resolvent(1.0, exc.x)
            y_last, v_last = SmoothedObjective(problem, xi, y0).dual_residual(x_last)
            exc.certificate = StationaryCertificate.from_vectors(
                np.full_like(x_last, np.nan), v_last, x_last, y_last
            )
        raise
    cert = certificate_from_point(SmoothedObjective(problem, xi, y0), x_bar, u_bar)
    return cert, report


def directional_tau(m: float, D_y: float, delta: float) -> float:
    """tau = min{m delta^2 / (2 D_y), delta^2 / (32 m D_y)}."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if D_y <= 0:
        return math.inf
    return min(m * delta**2 / (2.0 * D_y), delta**2 / (32.0 * m * D_y))


def solve_directional(
    problem: MinMaxProblem,
    delta: float,
    x0: Vector,
    y0: Vector | None = None,
    *,
    inner: InnerMethod = "aipp",
    config: AippConfig | RaippConfig | None = None,
) -> tuple[Vector, DirectionalCertificate, SolveReport]:
    """Point whose composite directional derivative is bounded below by -delta near it."""
    tau = directional_tau(problem.m, problem.D_y, delta)
    rho_y = tau if math.isfinite(tau) else 1.0
    cert, report = solve_primal_dual(problem, delta / 2.0, rho_y, x0, y0, inner=inner, config=config)
    dd_lower, dist = near_directional_certificate(cert, problem.m, problem.D_y)
    return cert.x_bar, DirectionalCertificate(delta, tau, dd_lower, dist, cert), report


# ---------------------------------------------------------------------------
# Stationarity conversions
# ---------------------------------------------------------------------------


def near_directional_bounds(norm_u: float, norm_v: float, m: float, D_y: float) -> tuple[float, float]:
    """(-norm_u - 2 sqrt(2 m D_y norm_v), sqrt(2 D_y norm_v / m))."""
    lower = -norm_u - 2.0 * math.sqrt(2.0 * m * D_y * norm_v)
    dist = math.sqrt(2.0 * D_y * norm_v / m)
    return lower, dist


def near_directional_certificate(cert: StationaryCertificate, m: float, D_y: float) -> tuple[float, float]:
    return near_directional_bounds(cert.norm_u, cert.norm_v, m, D_y)


def prox_stationarity_bounds(lam: float, m: float, value: float, direction: ProxDirection | str) -> float:
    """Threshold converting between prox-stationarity (eps) and directional stationarity (delta).

    DeltaToEps: delta <= lam^3 eps / (lam^2 + 2 (1 - lam m)(1 + lam)).
    EpsToDelta: eps <= delta * min{1, 1/lam}.
    """
    if not 0.0 < lam < 1.0 / m:
        raise ValueError(f"lam must lie in (0, 1/m) = (0, {1.0 / m}), got {lam}")
    if ProxDirection(direction) is ProxDirection.DELTA_TO_EPS:
        return lam**3 * value / (lam**2 + 2.0 * (1.0 - lam * m) * (1.0 + lam))
    return value * min(1.0, 1.0 / lam)


def nash_residuals(problem: MinMaxProblem, x: Vector, y: Vector) -> tuple[float, float]:
    """(dist(0, grad_x Phi + dh(x)), dist(0, -grad_y Phi + N_Y(y)))."""
    for spec in (problem.x_set, problem.y_set):
        if spec.kind not in (SetKind.SIMPLEX, SetKind.BOX, SetKind.FREE):
            raise Unsupported(f"nash_residuals: unsupported set kind {spec.kind}")
    grad_y = problem.require_grad_y()
    rx = problem.x_set.normal_cone_distance(x, problem.grad_x_phi(x, y))
    ry = problem.y_set.normal_cone_distance(y, -grad_y(x, y))
    return rx, ry
