import logging
import sys
from pathlib import Path
from typing import TextIO

import structlog

_log_handle: TextIO | None = None


def configure_logging(level: str = "WARNING", log_file: Path | None = None) -> None:
    """Structured logs to stderr, or as JSON lines appended to ``log_file`` when given."""
    global _log_handle
    if _log_handle is not None:
        _log_handle.close()
        _log_handle = None

    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        _log_handle = log_file.open("a", encoding="utf-8")
        renderer = structlog.processors.JSONRenderer()
        factory = structlog.WriteLoggerFactory(file=_log_handle)
    else:
        renderer = (
            structlog.dev.ConsoleRenderer()
            if sys.stderr.isatty()
            else structlog.processors.JSONRenderer()
        )
        factory = structlog.PrintLoggerFactory(file=sys.stderr)

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            getattr(logging, level.upper(), logging.WARNING)
        ),
        context_class=dict,
        logger_factory=factory,
        cache_logger_on_first_use=False,
    )


def bind_run_context(**kwargs: object) -> None:
    """Attach key/values (command, seed) to every log line of the current run."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(**kwargs)
