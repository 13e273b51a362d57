"""
Process Settings

Environment-driven switches, optionally loaded from a .env file, and the
logging setup shared by the CLI, the dashboard and the diagnostic script.
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

DEFAULT_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _flag(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


def debug_enabled() -> bool:
    """Whether every tensor op asserts finiteness of its output."""
    return _flag("LOCAL_LEARNING_DEBUG")


def queue_timeout() -> float:
    """Seconds a free-running pipeline worker waits on a queue before declaring deadlock."""
    return float(os.getenv("LOCAL_LEARNING_QUEUE_TIMEOUT", "30"))


def run_slow_tests() -> bool:
    return _flag("LOCAL_LEARNING_RUN_SLOW")


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once for an entry point."""
    level_name = (level or os.getenv("LOCAL_LEARNING_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=DEFAULT_LOG_FORMAT)


def idx_data_dir() -> Optional[str]:
    """Directory holding the four standard IDX digit files, for the desk-scale tests."""
    return os.getenv("LOCAL_LEARNING_IDX_DIR")
