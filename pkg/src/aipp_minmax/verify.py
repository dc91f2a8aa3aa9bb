"""
Independent re-verification of stored stationarity certificates.

Nothing from the solve is trusted except the certificate vectors and the smoothing metadata:
y_xi(x_bar) is recomputed from scratch, the x-inclusion is checked through the normal cone of
X, and the Nash residuals and the smoothing sandwich are measured at x_bar.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core.errors import DimensionError
from .core.schemas import StationaryCertificate
from .problems import Instance
from .smoothing import SmoothedObjective
from .solvers.aipp_s import nash_residuals
from .storage import CertificateMeta, load_certificate, load_instance

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float = float("nan")
    bound: float = float("nan")
    message: str = ""
    elapsed_ms: float = 0.0


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def run(self, name: str, fn: Callable[[], tuple[float, float]], *, slack: float = 0.0) -> None:
        """Record `measured <= bound + slack` for fn() = (measured, bound)."""
        t0 = time.perf_counter()
        try:
            measured, bound = fn()
            passed = bool(np.isfinite(measured) and measured <= bound + slack)
            msg = "OK" if passed else f"{measured:.3e} exceeds {bound:.3e}"
            self.checks.append(CheckResult(name, passed, measured, bound, msg, (time.perf_counter() - t0) * 1000))
        except Exception as exc:
            self.checks.append(CheckResult(name, False, message=str(exc), elapsed_ms=(time.perf_counter() - t0) * 1000))

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{status:4}  {c.name:<22} measured={c.measured:.3e} bound={c.bound:.3e}  {c.message}")
        return out


def verify_certificate(
    instance: Instance,
    cert: StationaryCertificate,
    meta: CertificateMeta,
    *,
    y0: np.ndarray | None = None,
    A: np.ndarray | None = None,
    b: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    problem = instance.problem
    if cert.x_bar.shape != (problem.n_x,) or cert.u_bar.shape != (problem.n_x,):
        raise DimensionError(f"certificate x-vectors do not match n_x={problem.n_x}")
    if cert.y_bar.shape != (problem.n_y,) or cert.v_bar.shape != (problem.n_y,):
        raise DimensionError(f"certificate y-vectors do not match n_y={problem.n_y}")
    y0 = np.zeros(problem.n_y) if y0 is None else np.asarray(y0, dtype=float)
    smoothed = SmoothedObjective(problem, meta.xi, y0)
    report = VerificationReport()
    x_bar, y_bar, u_bar = cert.x_bar, cert.y_bar, cert.u_bar
    constrained = cert.r_bar is not None
    if constrained and (A is None or b is None):
        raise ValueError("constrained certificate without its constraint data (A, b)")

    def norm_u() -> tuple[float, float]:
        return float(np.linalg.norm(u_bar)), meta.rho_x_abs

    def x_domain() -> tuple[float, float]:
        return (0.0 if problem.x_set.contains(x_bar) else 1.0), 0.0

    y_fresh, v_fresh = smoothed.dual_residual(x_bar)

    def y_consistency() -> tuple[float, float]:
        gap = max(float(np.linalg.norm(y_fresh - y_bar)), float(np.linalg.norm(v_fresh - cert.v_bar)))
        return gap, tol * max(1.0, float(np.linalg.norm(v_fresh)))

    def norm_v() -> tuple[float, float]:
        return float(np.linalg.norm(v_fresh)), meta.rho_y

    def x_gradient() -> np.ndarray:
        g = problem.grad_x_phi(x_bar, y_bar)
        if constrained:
            g = g + A.T @ cert.r_bar  # type: ignore[union-attr]
        return g

    def x_inclusion() -> tuple[float, float]:
        g = x_gradient()
        dist = problem.x_set.normal_cone_distance(x_bar, g - u_bar)
        return dist, tol * max(1.0, float(np.linalg.norm(g)))

    def nash_x() -> tuple[float, float]:
        if constrained:
            return problem.x_set.normal_cone_distance(x_bar, x_gradient()), float(np.linalg.norm(u_bar)) + tol
        rx, _ = nash_residuals(problem, x_bar, y_bar)
        return rx, float(np.linalg.norm(u_bar)) + tol

    def nash_y() -> tuple[float, float]:
        _, ry = nash_residuals(problem, x_bar, y_bar)
        return ry, float(np.linalg.norm(cert.v_bar)) + tol

    def sandwich() -> tuple[float, float]:
        p = instance.max_value(x_bar)
        lower, upper = smoothed.sandwich_gap(x_bar, p)
        return -min(lower, upper), tol * max(1.0, abs(p))

    report.run("norm_u", norm_u, slack=1e-12 * max(1.0, meta.rho_x_abs))
    report.run("x_in_domain", x_domain)
    report.run("y_bar_recomputed", y_consistency)
    report.run("norm_v", norm_v, slack=1e-12 * max(1.0, meta.rho_y))
    report.run("x_inclusion", x_inclusion)
    report.run("nash_x", nash_x)
    report.run("nash_y", nash_y)
    report.run("smoothing_sandwich", sandwich)

    if constrained:
        residual = A @ x_bar - b  # type: ignore[operator]

        def feasibility() -> tuple[float, float]:
            if meta.eta is None:
                raise ValueError("constrained certificate without eta")
            return float(np.linalg.norm(residual)), meta.eta

        def multiplier() -> tuple[float, float]:
            if meta.penalty_c is None:
                raise ValueError("constrained certificate without the final penalty parameter")
            expected = meta.penalty_c * residual
            return float(np.linalg.norm(cert.r_bar - expected)), 1e-10 * max(1.0, float(np.linalg.norm(expected)))

        report.run("feasibility", feasibility, slack=1e-12)
        report.run("multiplier_identity", multiplier)

    for c in report.checks:
        log = logger.info if c.passed else logger.warning
        log("verify %-20s %s (measured=%.3e, bound=%.3e)", c.name, "pass" if c.passed else "FAIL", c.measured, c.bound)
    return report


def verify_files(instance_path: str | Path, certificate_path: str | Path, tol: float = DEFAULT_TOL) -> VerificationReport:
    instance = load_instance(instance_path)
    cert, meta, extras = load_certificate(certificate_path)
    if meta.family != instance.family:
        raise DimensionError(f"certificate is for family {meta.family!r}, instance is {instance.family!r}")
    return verify_certificate(
        instance, cert, meta, y0=extras.get("y0"), A=extras.get("A"), b=extras.get("b"), tol=tol
    )
