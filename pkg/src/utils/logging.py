"""
Logging configuration for sift-bench
"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional, Union


def setup_logging(verbose: bool = False,
                  log_file: Optional[Union[str, Path]] = None,
                  level: str = "INFO",
                  max_file_size_mb: int = 10,
                  backup_count: int = 5) -> logging.Logger:
    """
    Setup logging configuration

    Console output goes to standard error so standard output carries only
    command results. A rotating log file is added only when log_file is set.

    Args:
        verbose: Enable debug output on the console
        log_file: Optional log file path
        level: Console level when not verbose
        max_file_size_mb: Rotation size of the log file
        backup_count: Rotated files to keep

    Returns:
        Configured root logger
    """
    log_level = logging.DEBUG if verbose else logging.getLevelName(str(level).upper())
    if not isinstance(log_level, int):
        log_level = logging.INFO

    logger = logging.getLogger()
    logger.setLevel(logging.DEBUG if log_file else log_level)

    # Clear existing handlers
    logger.handlers.clear()

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    simple_formatter = logging.Formatter(
        '%(levelname)s: %(message)s'
    )

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=int(max_file_size_mb) * 1024 * 1024,
            backupCount=int(backup_count),
            encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(detailed_formatter)
        logger.addHandler(file_handler)

    # Console handler (stderr)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(simple_formatter)
    logger.addHandler(console_handler)

    logger.debug(f"Logging initialized (level {logging.getLevelName(log_level)}"
                 + (f", file {log_file})" if log_file else ")"))
    return logger

