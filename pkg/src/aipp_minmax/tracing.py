"""Optional MLflow span tracing of bench cells (install the `tracing` extra)."""

from __future__ import annotations

import logging
from collections.abc import Callable
from typing import Any

from .config import TracingSettings, get_settings

logger = logging.getLogger(__name__)

try:
    import mlflow as _mlflow

    _trace = _mlflow.trace
except ImportError:
    _mlflow = None

    def _trace(*args: Any, **kwargs: Any) -> Any:
        """No-op decorator when mlflow-tracing is not installed."""
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


_enabled = False


def init_tracing(settings: TracingSettings | None = None) -> bool:
    """Point MLflow at the configured experiment; returns whether spans will be emitted."""
    global _enabled
    settings = settings or get_settings().tracing
    _enabled = False
    if not settings.enabled:
        logger.debug("tracing disabled by settings")
        return False
    if _mlflow is None:
        logger.info("mlflow-tracing not installed; tracing disabled.")
        return False
    try:
        _mlflow.set_experiment(settings.experiment)
    except Exception as e:
        logger.warning("MLflow tracing init failed (non-fatal): %s", e)
        return False
    _enabled = True
    logger.info("MLflow tracing -> experiment %s", settings.experiment)
    return True


def traced(name: str, span_type: str = "CHAIN") -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """Decorator emitting a span around the wrapped call when tracing is initialized."""

    def decorate(fn: Callable[..., Any]) -> Callable[..., Any]:
        spanned = _trace(name=name, span_type=span_type)(fn)

        def call(*args: Any, **kwargs: Any) -> Any:
            return spanned(*args, **kwargs) if _enabled else fn(*args, **kwargs)

        call.__name__ = getattr(fn, "__name__", name)
        call.__doc__ = fn.__doc__
        return call

    return decorate
