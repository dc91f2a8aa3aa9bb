"""
Result types shared by the solvers, the verifier and the CLI.

Reports are pydantic models so they serialize straight into the JSON-lines run log;
certificates carry numpy vectors and are plain frozen dataclasses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, model_validator

Vector = NDArray[np.float64]


class Termination(str, Enum):
    CONVERGED = "Converged"
    TIME_LIMIT = "TimeLimit"
    ITER_LIMIT = "IterLimit"


class SetKind(str, Enum):
    """Convex sets whose normal cones the verifier knows how to handle."""

    SIMPLEX = "simplex"
    BOX = "box"
    FREE = "free"


class SolveReport(BaseModel):
    """Work and outcome of one solve."""

    outer_iterations: int = Field(default=0, ge=0, description="Outer (prox or penalty) iterations")
    acg_iterations: int = Field(default=0, ge=0, description="Total inner ACG iterations")
    oracle_calls: int = Field(default=0, ge=0, description="Bundled oracle evaluations")
    oracle_counts: dict[str, int] = Field(default_factory=dict, description="Per-category oracle evaluations")
    wall_time: float = Field(default=0.0, ge=0.0, description="Seconds")
    terminal_value: float | None = Field(default=None, description="Objective at the returned point")
    termination: Termination = Termination.CONVERGED
    penalty_c_final: float | None = None
    penalty_trace: list[float] = Field(default_factory=list)
    feasibility_trace: list[float] = Field(default_factory=list)
    lambda_trace: list[float] = Field(default_factory=list)
    tau_trace: list[float] = Field(default_factory=list)
    curvature_estimate: float | None = Field(default=None, description="Final adaptive upper curvature")

    @model_validator(mode="after")
    def _calls_cover_iterations(self) -> SolveReport:
        if self.oracle_calls < self.acg_iterations:
            raise ValueError(
                f"oracle_calls ({self.oracle_calls}) < acg_iterations ({self.acg_iterations})"
            )
        return self


@dataclass(frozen=True)
class StationaryCertificate:
    """Primal-dual stationarity quadruple, or quintuple when a multiplier is present."""

    u_bar: Vector
    v_bar: Vector
    x_bar: Vector
    y_bar: Vector
    norm_u: float
    norm_v: float
    r_bar: Vector | None = None
    feas_violation: float | None = None

    @classmethod
    def from_vectors(
        cls,
        u_bar: Any,
        v_bar: Any,
        x_bar: Any,
        y_bar: Any,
        r_bar: Any = None,
        feas_violation: float | None = None,
    ) -> StationaryCertificate:
        u = np.asarray(u_bar, dtype=float)
        v = np.asarray(v_bar, dtype=float)
        return cls(
            u_bar=u,
            v_bar=v,
            x_bar=np.asarray(x_bar, dtype=float),
            y_bar=np.asarray(y_bar, dtype=float),
            norm_u=float(np.linalg.norm(u)),
            norm_v=float(np.linalg.norm(v)),
            r_bar=None if r_bar is None else np.asarray(r_bar, dtype=float),
            feas_violation=feas_violation,
        )


@dataclass(frozen=True)
class DirectionalCertificate:
    """Near-directional stationarity bounds derived from a primal-dual certificate."""

    delta: float
    tau: float
    dd_lower_bound: float
    distance_bound: float
    certificate: StationaryCertificate

    @property
    def holds(self) -> bool:
        tol = 1e-12 * max(1.0, self.delta)
        return self.dd_lower_bound >= -self.delta - tol and self.distance_bound <= self.delta + tol
