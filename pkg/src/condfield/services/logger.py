"""Unified logging system using structlog."""

import logging
import sys
import time
from typing import Any

import structlog
from structlog.stdlib import LoggerFactory

from condfield.config import settings


def configure_logging() -> None:
    """Configure structlog with appropriate processors."""
    if settings.log_format == "auto":
        use_pretty = settings.is_development and sys.stderr.isatty()
    else:
        use_pretty = settings.log_format == "console"

    processors = [
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]

    if use_pretty:
        processors.append(structlog.dev.ConsoleRenderer())
    else:
        processors.append(structlog.processors.JSONRenderer())

    structlog.configure(
        processors=processors,
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    # stdout carries CLI results, so logs go to stderr
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
    )


# Configure logging on module import
configure_logging()


def get_logger(component: str = "condfield") -> structlog.stdlib.BoundLogger:
    """Get a logger instance for a component."""
    return structlog.get_logger(component)


def create_run_logger(component: str, run_id: str | None = None) -> structlog.stdlib.BoundLogger:
    """Create a run-scoped logger with correlation ID."""
    import uuid

    correlation_id = run_id or str(uuid.uuid4())
    return structlog.get_logger(component).bind(run_id=correlation_id)


class PerformanceLogger:
    """Performance timing logger utility."""

    def __init__(self, logger: structlog.stdlib.BoundLogger, operation: str) -> None:
        """Initialize performance logger."""
        self.logger = logger
        self.operation = operation
        self.start_time = time.perf_counter()
        self.duration_ms: float | None = None

        self.logger.debug(
            operation=operation,
            phase="start",
            msg=f"Starting operation: {operation}",
        )

    def finish(
        self, result: str = "success", additional_data: dict[str, Any] | None = None
    ) -> float:
        """Log operation completion and return its duration in milliseconds."""
        duration_ms = (time.perf_counter() - self.start_time) * 1000
        self.duration_ms = duration_ms
        log_data: dict[str, Any] = {
            "operation": self.operation,
            "phase": "finish",
            "duration_ms": duration_ms,
            "result": result,
        }
        if additional_data:
            log_data.update(additional_data)

        if result == "error":
            self.logger.warning(
                **log_data,
                msg=f"Operation completed with error: {self.operation} ({duration_ms:.2f}ms)",
            )
        else:
            self.logger.info(
                **log_data, msg=f"Operation completed: {self.operation} ({duration_ms:.2f}ms)"
            )
        return duration_ms


def log_training_epoch(
    epoch: int,
    train_loss: float,
    validation_loss: float,
    context: dict[str, Any] | None = None,
) -> None:
    """Log the end of one training epoch."""
    log_data: dict[str, Any] = {
        "type": "training_epoch",
        "epoch": epoch,
        "train_loss": train_loss,
        "validation_loss": validation_loss,
    }
    if context:
        log_data.update(context)
    condnet_logger.info(
        **log_data,
        msg=f"Epoch {epoch}: train {train_loss:.5f}, validation {validation_loss:.5f}",
    )


def log_solver_cycle(cycle: int, relative_residual: float, level_count: int) -> None:
    """Log one multigrid cycle."""
    spfd_logger.debug(
        type="solver_cycle",
        cycle=cycle,
        relative_residual=relative_residual,
        levels=level_count,
        msg=f"Cycle {cycle}: relative residual {relative_residual:.3e}",
    )


grid_logger = get_logger("grid")
phantom_logger = get_logger("phantom")
conductor_logger = get_logger("conductor")
condnet_logger = get_logger("condnet")
coil_logger = get_logger("coil")
spfd_logger = get_logger("spfd")
metrics_logger = get_logger("metrics")
