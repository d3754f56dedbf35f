"""
Logging utility for the survey generalization toolkit.
"""

import logging
import os
import sys
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def _resolve_level(level: Optional[int]) -> int:
    if level is not None:
        return level
    name = os.getenv("LOG_LEVEL", "INFO").upper()
    return getattr(logging, name, logging.INFO)


def setup_logger(name: str = None, level: Optional[int] = None) -> logging.Logger:
    """
    Set up a logger with consistent formatting.

    Records go to stderr; stdout is reserved for values scripts may capture
    (for example a generated seed).

    Args:
        name: Logger name (typically __name__; "root" configures every module)
        level: Logging level (default: LOG_LEVEL env var, else INFO)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger() if name == "root" else logging.getLogger(name or __name__)
    resolved = _resolve_level(level)

    logger.setLevel(resolved)

    # Avoid adding handlers multiple times; sys.stderr may have been swapped since
    ours = [h for h in logger.handlers if getattr(h, "_toolkit_handler", False)]
    if ours:
        for handler in ours:
            handler.setLevel(resolved)
            handler.stream = sys.stderr
        return logger

    handler = logging.StreamHandler(sys.stderr)
    handler._toolkit_handler = True
    handler.setLevel(resolved)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))

    logger.addHandler(handler)

    return logger


def get_logger(name: str = None) -> logging.Logger:
    """
    Get or create a logger instance.

    Args:
        name: Logger name (typically __name__)

    Returns:
        Logger instance
    """
    return logging.getLogger(name or __name__)
