"""Structured logging configuration using structlog."""

import logging
import sys

import structlog

from src.core.config import get_settings


def setup_logging(level: str | None = None, json: bool | None = None) -> None:
    """
    Configure structured logging on stderr; stdout carries reports only.

    Args:
        level: Log level name, defaults to the settings value
        json: JSON lines instead of console output, defaults to the settings value
    """
    settings = get_settings()
    level = level or settings.log_level
    json = settings.log_json if json is None else json

    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level),
        force=True,
    )

    shared_processors: list[structlog.typing.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.UnicodeDecoder(),
    ]

    if json:
        processors = [
            *shared_processors,
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(),
        ]
    else:
        processors = [
            *shared_processors,
            structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()),
        ]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def bind_command_context(command: str) -> None:
    """Bind the running subcommand to every event of this run."""
    structlog.contextvars.bind_contextvars(command=command)


def clear_command_context() -> None:
    structlog.contextvars.unbind_contextvars("command")
