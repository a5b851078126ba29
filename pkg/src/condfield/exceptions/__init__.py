"""Exception handling."""

from condfield.exceptions.custom_errors import BaseError
from condfield.exceptions.handlers import (
    base_error_handler,
    general_exception_handler,
    handle_cli_error,
    validation_error_handler,
)

__all__ = [
    "BaseError",
    "base_error_handler",
    "general_exception_handler",
    "handle_cli_error",
    "validation_error_handler",
]
