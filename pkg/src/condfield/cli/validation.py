"""Argument checks beyond what argparse enforces."""

import argparse
import os
from pathlib import Path
from typing import Any

from condfield.config import settings
from condfield.core.conductor import TissueTable, resolve_table
from condfield.exceptions.custom_errors import ValidationError
from condfield.exceptions.types import ErrorCode, ErrorContext, ValidationErrorDetail


def _positive(name: str, value: Any, errors: list[ValidationErrorDetail]) -> None:
    if value is not None and not value > 0:
        errors.append(
            ValidationErrorDetail(
                field=name, value=value, message=f"{name} must be positive", code="not_positive"
            )
        )


def validate_args(args: argparse.Namespace) -> None:
    """Collect every argument problem, then raise them together."""
    errors: list[ValidationErrorDetail] = []

    positive = ("threads", "epochs", "batch", "tol", "voxel_mm", "max_cycles", "subjects")
    for name in (*positive, "batch_slices", "roi_radius"):
        _positive(f"--{name.replace('_', '-')}", getattr(args, name, None), errors)

    tau = getattr(args, "tau", None)
    if tau is not None and not 0.0 < tau < 1.0:
        errors.append(
            ValidationErrorDetail(
                field="--tau", value=tau, message="--tau must lie in (0, 1)", code="out_of_range"
            )
        )

    seed = getattr(args, "seed", None)
    if seed is not None and seed < 0:
        errors.append(
            ValidationErrorDetail(
                field="--seed", value=seed, message="--seed must be non-negative", code="negative"
            )
        )

    dims = getattr(args, "dims", None)
    if dims is not None and any(n <= 0 for n in dims):
        errors.append(
            ValidationErrorDetail(
                field="--dims", value=dims, message="--dims must be positive", code="not_positive"
            )
        )

    omega = getattr(args, "omega", None)
    if omega is not None and not 0.0 < omega < 2.0:
        errors.append(
            ValidationErrorDetail(
                field="--omega", value=omega, message="--omega must lie in (0, 2)", code="range"
            )
        )

    if errors:
        raise ValidationError(
            "Argument validation failed: " + "; ".join(e.message for e in errors),
            errors,
            ErrorContext(operation=getattr(args, "command_name", None), component="cli"),
            ErrorCode.INVALID_FIELD_VALUE,
        )


def output_path(path: str | Path) -> Path:
    """Relative outputs are placed under the configured output directory."""
    if os.path.isabs(path):
        return Path(path)
    return settings.output_base / path


def resolved(args: argparse.Namespace, name: str, default: Any) -> Any:
    value = getattr(args, name, None)
    return default if value is None else value


def seed_of(args: argparse.Namespace) -> int:
    return int(resolved(args, "seed", settings.seed))


def tau_of(args: argparse.Namespace) -> float:
    return float(resolved(args, "tau", settings.tau))


def threads_of(args: argparse.Namespace) -> int:
    return int(resolved(args, "threads", settings.threads))


def tables_of(args: argparse.Namespace) -> list[TissueTable]:
    names = resolved(args, "table", [settings.default_table])
    return [resolve_table(name) for name in names]
