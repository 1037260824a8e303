"""
Structured logging setup using structlog.

Logs always go to stderr (or a given stream); stdout is reserved for TSV
reports and command summaries.
"""

import logging
import sys
from contextlib import contextmanager
from typing import Any, Iterator, MutableMapping, Optional, TextIO

import numpy as np
import structlog
import torch

EventDict = MutableMapping[str, Any]


def plain_numbers(logger: Any, method_name: str, event_dict: EventDict) -> EventDict:
    """Turn numpy scalars and one-element tensors into Python numbers."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, torch.Tensor) and value.numel() == 1:
            event_dict[key] = value.item()
    return event_dict


def setup_logging(log_level: str = "INFO", json_logs: bool = False, stream: Optional[TextIO] = None) -> None:
    """
    Configure structlog on top of the stdlib root logger.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        json_logs: Render JSON lines instead of the console format
        stream: Destination; stderr when omitted
    """
    logging.basicConfig(
        format="%(message)s",
        stream=stream or sys.stderr,
        level=getattr(logging, log_level.upper()),
        force=True,
    )
    # torch and numpy report through warnings.warn
    logging.captureWarnings(True)

    renderer = structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.filter_by_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            plain_numbers,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        # commands may reconfigure within one process
        cache_logger_on_first_use=False,
    )


@contextmanager
def command_context(command: str) -> Iterator[None]:
    """Tag every log line emitted inside the block with the command name."""
    with structlog.contextvars.bound_contextvars(command=command):
        yield


def get_logger(name: Optional[str] = None) -> structlog.BoundLogger:
    return structlog.get_logger(name)
