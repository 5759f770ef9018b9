"""
Logging configuration for the router.

The main process logs to the console and optionally to a file. Worker
processes of the evaluation pools get a console handler of their own whose
records carry the worker's process id.
"""

import logging
import sys
from pathlib import Path
from typing import Optional

LOGGER_NAME = "connection_router"

_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
_WORKER_FORMAT = '%(asctime)s - %(name)s[worker %(process)d] - %(levelname)s - %(message)s'
_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def _level(log_level: str) -> int:
    return getattr(logging, str(log_level).upper(), logging.INFO)


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the router logger in the main process.

    Safe to call more than once: a later call resets the console level and
    attaches `log_file` if no handler writes to it yet. The file handler
    always records DEBUG.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path to log file. If None, logs only to console.

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger(LOGGER_NAME)
    level = _level(log_level)
    formatter = logging.Formatter(fmt=_FORMAT, datefmt=_DATE_FORMAT)

    console = next((h for h in logger.handlers if not isinstance(h, logging.FileHandler)), None)
    if console is None:
        console = logging.StreamHandler(sys.stdout)
        console.setFormatter(formatter)
        logger.addHandler(console)
    console.setLevel(level)

    if log_file:
        log_path = Path(log_file).resolve()
        attached = any(
            isinstance(h, logging.FileHandler) and Path(h.baseFilename) == log_path
            for h in logger.handlers
        )
        if not attached:
            log_path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_path, encoding='utf-8')
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    has_file = any(isinstance(h, logging.FileHandler) for h in logger.handlers)
    logger.setLevel(logging.DEBUG if has_file else level)
    return logger


def configure_worker_logging(log_level: str) -> None:
    """Pool initializer hook: stderr logging inside a worker process."""
    logger = logging.getLogger(LOGGER_NAME)
    level = _level(log_level)
    logger.setLevel(level)
    # forked workers inherit the parent's handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(fmt=_WORKER_FORMAT, datefmt=_DATE_FORMAT))
    handler.setLevel(level)
    logger.addHandler(handler)


def current_level_name() -> str:
    """Console level of the router logger, for handing to worker processes."""
    logger = logging.getLogger(LOGGER_NAME)
    console = next((h for h in logger.handlers if not isinstance(h, logging.FileHandler)), None)
    level = console.level if console is not None else logger.getEffectiveLevel()
    return logging.getLevelName(level or logging.WARNING)
