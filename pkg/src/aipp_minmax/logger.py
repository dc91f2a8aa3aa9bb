"""Package logger.

Library modules log through `logging.getLogger(__name__)`; handlers are only attached by the
command line entry point via `configure_logging`.
"""

import logging

app_name = "aipp_minmax"

logger: logging.Logger = logging.getLogger(app_name)
logger.addHandler(logging.NullHandler())

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | int = "INFO") -> None:
    """Attach a stderr handler to the package logger (idempotent)."""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    logger.setLevel(level)
    if not any(isinstance(h, logging.StreamHandler) and not isinstance(h, logging.NullHandler) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        logger.addHandler(handler)
