"""
Logger - Logging configuration for anisomesh.
"""

import logging
import os
from pathlib import Path
from typing import Optional

# Global logger instance
_logger: Optional[logging.Logger] = None


def anisomesh_home() -> Path:
    """Return the per-user state directory (config, history, logs)."""
    override = os.getenv("ANISOMESH_HOME")
    if override:
        return Path(override)
    return Path.home() / ".anisomesh"


def setup_logger(name: str = "anisomesh", level: str = "INFO", verbose: bool = False) -> logging.Logger:
    """Setup main logger."""
    global _logger

    if _logger is not None:
        if verbose:
            _attach_console(_logger)
        return _logger

    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper()))

    if not logger.handlers:
        # File handler; console output is opt-in
        try:
            log_dir = anisomesh_home() / "logs"
            log_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_dir / "anisomesh.log")
            file_handler.setLevel(logging.DEBUG)
            file_formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
            )
            file_handler.setFormatter(file_formatter)
            logger.addHandler(file_handler)
        except Exception:
            # If file logging fails, create a null handler
            null_handler = logging.NullHandler()
            logger.addHandler(null_handler)

    if verbose:
        _attach_console(logger)

    _logger = logger
    return logger


def _attach_console(logger: logging.Logger) -> None:
    """Add a rich console handler once."""
    from rich.logging import RichHandler

    if any(isinstance(h, RichHandler) for h in logger.handlers):
        return
    console_handler = RichHandler(show_path=False, markup=False)
    console_handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(console_handler)


def get_logger(name: str) -> logging.Logger:
    """Get logger for module."""
    # Ensure main logger is initialized
    if _logger is None:
        setup_logger()
    if name.startswith("anisomesh"):
        return logging.getLogger(name)
    return logging.getLogger(f"anisomesh.{name}")
