"""Service layer."""

from condfield.services.logger import (
    PerformanceLogger,
    coil_logger,
    condnet_logger,
    conductor_logger,
    create_run_logger,
    get_logger,
    grid_logger,
    log_solver_cycle,
    log_training_epoch,
    metrics_logger,
    phantom_logger,
    spfd_logger,
)

__all__ = [
    "get_logger",
    "create_run_logger",
    "PerformanceLogger",
    "log_training_epoch",
    "log_solver_cycle",
    "grid_logger",
    "phantom_logger",
    "conductor_logger",
    "condnet_logger",
    "coil_logger",
    "spfd_logger",
    "metrics_logger",
]
