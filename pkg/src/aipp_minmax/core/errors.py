"""Exception hierarchy shared by solvers, problem generators and the CLI."""

from __future__ import annotations

from typing import Any

from .schemas import SolveReport, Termination


class AippError(Exception):
    """Base class of every error raised by aipp_minmax."""


class DimensionError(AippError, ValueError):
    """Empty or shape-mismatched input."""


class InvalidCurvature(AippError, ValueError):
    """Curvature data inconsistent with the method's assumptions."""


class Divergence(AippError, RuntimeError):
    """Penalty parameter grew past its cap."""


class CalibrationError(AippError, RuntimeError):
    """Generator could not hit the requested curvature targets."""


class Unsupported(AippError, NotImplementedError):
    """Operation not available for the given set kind or problem."""


class LibsvmFormatError(AippError, ValueError):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SolverInterrupted(AippError, RuntimeError):
    """A solve stopped before its stationarity test passed.

    Inner loops raise it with their `state`; outer drivers fill in `report` and the last
    iterate `x` (and `certificate` when one can be assembled) before re-raising.
    """

    termination: Termination = Termination.ITER_LIMIT

    def __init__(self, message: str, *, state: Any = None) -> None:
        super().__init__(message)
        self.state = state
        self.report: SolveReport | None = None
        self.x: Any = None
        self.certificate: Any = None


class NonConvergence(SolverInterrupted):
    termination = Termination.ITER_LIMIT


class TimeLimitExceeded(SolverInterrupted):
    termination = Termination.TIME_LIMIT
