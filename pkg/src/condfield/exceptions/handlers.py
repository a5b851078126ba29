"""Command-line exception handlers."""

import sys
import traceback
from typing import Any, TextIO

from pydantic import ValidationError as PydanticValidationError

from condfield.config import settings
from condfield.exceptions.custom_errors import (
    BaseError,
    ConfigurationError,
    InternalError,
    InputFileNotFoundError,
)
from condfield.exceptions.types import ErrorContext, SystemErrorDetail, ValidationErrorDetail
from condfield.services import get_logger

logger = get_logger("error-handler")


def create_error_response(error: BaseError, include_stack: bool = False) -> dict[str, Any]:
    """Create standardized error response."""
    response = error.to_error_response()
    if include_stack and error.__traceback__ is not None:
        stack = "".join(traceback.format_tb(error.__traceback__))
        response["error"].setdefault("details", {})["stack"] = stack
    return response


def format_diagnostic(error: BaseError) -> str:
    """One-line stderr diagnostic for a failed command."""
    where = error.context.to_dict()
    suffix = ""
    if where:
        suffix = " (" + ", ".join(f"{k}={v}" for k, v in where.items()) + ")"
    return f"condfield: error [{error.code.value}]: {error.message}{suffix}"


def base_error_handler(exc: BaseError, stream: TextIO | None = None) -> int:
    """Handle custom BaseError instances and return the process exit code."""
    stream = stream or sys.stderr
    response = create_error_response(exc, include_stack=settings.is_development)
    log_fields: dict[str, Any] = {
        "error": exc.message,
        "error_type": exc.type.value,
        "code": exc.code.value,
        "exit_code": exc.exit_code,
        "is_operational": exc.is_operational,
        "context": exc.context.to_dict(),
        "details": response["error"].get("details", {}),
    }
    if exc.is_operational:
        logger.warning(**log_fields, msg=f"{exc.type.value}: {exc.message}")
    else:
        logger.error(**log_fields, msg=f"{exc.type.value}: {exc.message}")

    print(format_diagnostic(exc), file=stream)
    return exc.exit_code


def validation_error_handler(
    exc: PydanticValidationError, stream: TextIO | None = None, operation: str | None = None
) -> int:
    """Handle Pydantic validation errors raised by configuration models."""
    validation_errors = [
        ValidationErrorDetail(
            field=".".join(str(loc) for loc in error["loc"]),
            value=error.get("input"),
            message=error["msg"],
            code=error["type"],
        )
        for error in exc.errors()
    ]
    config_error = ConfigurationError(
        "; ".join(f"{ve.field}: {ve.message}" for ve in validation_errors)
        or "Invalid configuration",
        ErrorContext(operation=operation),
        details={"validationErrors": [ve.to_dict() for ve in validation_errors]},
    )
    return base_error_handler(config_error, stream)


def general_exception_handler(
    exc: Exception, stream: TextIO | None = None, operation: str | None = None
) -> int:
    """Handle unexpected exceptions."""
    if isinstance(exc, FileNotFoundError):
        return base_error_handler(
            InputFileNotFoundError(str(exc.filename or exc), ErrorContext(operation=operation)),
            stream,
        )

    system_details = SystemErrorDetail(
        component="cli",
        operation=operation or "command",
        original_error=str(exc),
        stack_trace=traceback.format_exc(),
    )
    internal_error = InternalError(
        message="An unexpected error occurred" if not settings.is_development else str(exc),
        system_details=system_details,
        context=ErrorContext(operation=operation),
    )
    return base_error_handler(internal_error, stream)


def handle_cli_error(exc: BaseException, operation: str | None = None) -> int:
    """Route any exception raised by a command to its handler."""
    if isinstance(exc, BaseError):
        return base_error_handler(exc)
    if isinstance(exc, PydanticValidationError):
        return validation_error_handler(exc, operation=operation)
    if isinstance(exc, Exception):
        return general_exception_handler(exc, operation=operation)
    raise exc
