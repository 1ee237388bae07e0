"""
Structured Logging Configuration
Centralized logging setup with structured output and multiple handlers.
"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional

import structlog
from rich.console import Console
from rich.logging import RichHandler


def setup_logging(log_level: str = "INFO", logs_dir: Optional[str] = None):
    """
    Set up structured logging with both console and file output.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        logs_dir: Directory for log files (optional)
    """
    if logs_dir:
        logs_path = Path(logs_dir)
        logs_path.mkdir(parents=True, exist_ok=True)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer(sort_keys=True),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    level = getattr(logging, log_level.upper())
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    # Console handler on stderr so stdout stays clean for tables and paths
    console_handler = RichHandler(
        console=Console(stderr=True),
        show_time=True,
        show_path=False,
        markup=False,
        rich_tracebacks=True,
    )
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(fmt="%(name)s - %(message)s"))
    root_logger.addHandler(console_handler)

    if logs_dir:
        file_handler = logging.handlers.RotatingFileHandler(
            filename=logs_path / "trajthermo.log",
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=5,
            encoding="utf-8",
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(fmt="%(message)s"))
        root_logger.addHandler(file_handler)

    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug(f"Logging configured - Level: {log_level}")
    if logs_dir:
        logger.debug(f"Log files: {logs_path}")


class ContextLogger:
    """Context-aware logger for run tracking."""

    def __init__(self, logger_name: str):
        self.logger = structlog.get_logger(logger_name)

    def bind(self, **kwargs):
        """Bind context variables to logger."""
        return self.logger.bind(**kwargs)

    def debug(self, message: str, **kwargs):
        self.logger.debug(message, **kwargs)

    def info(self, message: str, **kwargs):
        self.logger.info(message, **kwargs)

    def warning(self, message: str, **kwargs):
        self.logger.warning(message, **kwargs)

    def error(self, message: str, **kwargs):
        self.logger.error(message, **kwargs)

    def exception(self, message: str, **kwargs):
        """Log exception with traceback."""
        self.logger.exception(message, **kwargs)


def get_logger(name: str) -> ContextLogger:
    """Get a context-aware logger instance."""
    return ContextLogger(name)


class PerformanceLogger:
    """Logger for pipeline stage timings."""

    def __init__(self):
        self.logger = get_logger("performance")

    def log_stage_time(self, stage: str, duration: float, points: int = 0):
        """Log the duration of one pipeline stage."""
        self.logger.info(
            "Stage completed",
            stage=stage,
            duration_ms=round(duration * 1000, 2),
            points=points,
            points_per_second=round(points / duration if duration > 0 and points > 0 else 0, 2),
        )

    def log_run_time(self, run_name: str, duration: float, exit_code: int):
        """Log a complete CLI run."""
        self.logger.info(
            "Run completed",
            run=run_name,
            duration_seconds=round(duration, 3),
            exit_code=exit_code,
        )


# Global performance logger instance
perf_logger = PerformanceLogger()
