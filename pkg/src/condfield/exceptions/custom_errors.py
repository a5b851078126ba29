"""Custom error classes with automatic process exit code assignment."""

from datetime import datetime, timezone
from typing import Any

from condfield.exceptions.types import (
    ErrorCode,
    ErrorContext,
    ErrorType,
    SystemErrorDetail,
    ValidationErrorDetail,
)

EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


class BaseError(Exception):
    """Base error class for all custom errors."""

    def __init__(
        self,
        message: str,
        error_type: ErrorType,
        code: ErrorCode,
        exit_code: int,
        context: ErrorContext | None = None,
        details: dict[str, Any] | None = None,
        is_operational: bool = True,
    ):
        """Initialize base error."""
        super().__init__(message)
        self.message = message
        self.type = error_type
        self.code = code
        self.exit_code = exit_code
        self.context = context or ErrorContext()
        self.details = details or {}
        self.is_operational = is_operational
        self.timestamp = datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")

    def to_error_response(self) -> dict[str, Any]:
        """Convert to error response format."""
        return {
            "error": {
                "message": self.message,
                "type": self.type.value,
                "code": self.code.value,
                "details": self.details,
                "context": self.context.to_dict(),
                "timestamp": self.timestamp,
            }
        }


# Usage errors
class ValidationError(BaseError):
    """Validation error."""

    def __init__(
        self,
        message: str,
        validation_errors: list[ValidationErrorDetail] | None = None,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.INVALID_ARGUMENT,
    ):
        """Initialize validation error."""
        details: dict[str, Any] = {}
        if validation_errors:
            details["validationErrors"] = [ve.to_dict() for ve in validation_errors]
        super().__init__(message, ErrorType.VALIDATION_ERROR, code, EXIT_USAGE, context, details)


class ConfigurationError(BaseError):
    """Configuration error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.INVALID_CONFIGURATION,
        details: dict[str, Any] | None = None,
    ):
        """Initialize configuration error."""
        super().__init__(
            message, ErrorType.CONFIGURATION_ERROR, code, EXIT_USAGE, context, details
        )


# Input errors
class InputFileNotFoundError(BaseError):
    """Input file not found error."""

    def __init__(self, path: str, context: ErrorContext | None = None):
        """Initialize input file not found error."""
        context = context or ErrorContext()
        context.path = path
        super().__init__(
            f"Input file '{path}' not found",
            ErrorType.INPUT_ERROR,
            ErrorCode.FILE_NOT_FOUND,
            EXIT_INPUT,
            context,
        )


# Grid errors
class GridError(BaseError):
    """Voxel grid error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.DIMENSION_MISMATCH,
        exit_code: int = EXIT_INPUT,
    ):
        """Initialize grid error."""
        super().__init__(message, ErrorType.GRID_ERROR, code, exit_code, context)


class DimensionMismatchError(GridError):
    """Grids or slices with incompatible dimensions."""

    def __init__(self, expected: Any, actual: Any, context: ErrorContext | None = None):
        """Initialize dimension mismatch error."""
        context = context or ErrorContext()
        context.extra.update({"expected": str(expected), "actual": str(actual)})
        super().__init__(
            f"Dimension mismatch: expected {expected}, got {actual}",
            context,
            ErrorCode.DIMENSION_MISMATCH,
        )


class GridIndexError(GridError):
    """Slice index outside the grid extent."""

    def __init__(self, index: int, extent: int, context: ErrorContext | None = None):
        """Initialize grid index error."""
        context = context or ErrorContext()
        context.extra.update({"index": index, "extent": extent})
        super().__init__(
            f"Slice index {index} outside extent [0, {extent})",
            context,
            ErrorCode.INDEX_OUT_OF_RANGE,
        )


class DegenerateInputError(GridError):
    """Input that admits no defined result (e.g. zero variance)."""

    def __init__(self, message: str, context: ErrorContext | None = None):
        """Initialize degenerate input error."""
        super().__init__(message, context, ErrorCode.DEGENERATE_INPUT, EXIT_NUMERICAL)


class NonFiniteValueError(GridError):
    """NaN or infinite values where finite values are required."""

    def __init__(self, what: str, context: ErrorContext | None = None):
        """Initialize non-finite value error."""
        super().__init__(
            f"{what} contains non-finite values",
            context,
            ErrorCode.NON_FINITE_VALUE,
            EXIT_NUMERICAL,
        )


# Volume file errors
class VolumeFormatError(BaseError):
    """Volume file format error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.MALFORMED_HEADER,
    ):
        """Initialize volume format error."""
        super().__init__(message, ErrorType.FORMAT_ERROR, code, EXIT_INPUT, context)


class MalformedHeaderError(VolumeFormatError):
    """Header line missing or unparsable."""

    def __init__(self, reason: str, context: ErrorContext | None = None):
        """Initialize malformed header error."""
        super().__init__(f"Malformed volume header: {reason}", context, ErrorCode.MALFORMED_HEADER)


class PayloadSizeError(VolumeFormatError):
    """Payload does not match the header dimensions."""

    def __init__(self, expected_bytes: int, actual_bytes: int, context: ErrorContext | None = None):
        """Initialize payload size error."""
        context = context or ErrorContext()
        context.extra.update({"expected_bytes": expected_bytes, "actual_bytes": actual_bytes})
        super().__init__(
            f"Payload holds {actual_bytes} bytes, header declares {expected_bytes}",
            context,
            ErrorCode.PAYLOAD_SIZE_MISMATCH,
        )


class UnknownDtypeError(VolumeFormatError):
    """Unsupported dtype code in a volume header."""

    def __init__(self, dtype_code: str, context: ErrorContext | None = None):
        """Initialize unknown dtype error."""
        super().__init__(f"Unknown dtype code '{dtype_code}'", context, ErrorCode.UNKNOWN_DTYPE)


# Tissue and conductor errors
class TissueTableError(BaseError):
    """Tissue table error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.INVALID_TISSUE_TABLE,
    ):
        """Initialize tissue table error."""
        super().__init__(message, ErrorType.TISSUE_ERROR, code, EXIT_INPUT, context)


class UnknownTissueError(TissueTableError):
    """Label identifiers missing from the tissue table."""

    def __init__(self, tissue_ids: list[int], table_tag: str, context: ErrorContext | None = None):
        """Initialize unknown tissue error."""
        context = context or ErrorContext()
        context.extra.update({"tissue_ids": tissue_ids, "table": table_tag})
        super().__init__(
            f"Tissue id(s) {tissue_ids} not in table '{table_tag}'",
            context,
            ErrorCode.UNKNOWN_TISSUE,
        )


class ConductorRangeError(BaseError):
    """Conductivity values outside the admissible range."""

    def __init__(self, message: str, context: ErrorContext | None = None):
        """Initialize conductor range error."""
        super().__init__(
            message,
            ErrorType.TISSUE_ERROR,
            ErrorCode.CONDUCTIVITY_OUT_OF_RANGE,
            EXIT_NUMERICAL,
            context,
        )


# Phantom errors
class PhantomSpecError(BaseError):
    """Phantom specification error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.INVALID_PHANTOM_SPEC,
    ):
        """Initialize phantom spec error."""
        super().__init__(message, ErrorType.PHANTOM_ERROR, code, EXIT_USAGE, context)


# Network errors
class NetworkConfigError(BaseError):
    """Network configuration error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.INVALID_NETWORK_CONFIG,
    ):
        """Initialize network config error."""
        super().__init__(message, ErrorType.NETWORK_ERROR, code, EXIT_USAGE, context)


class NetworkShapeError(BaseError):
    """Tensor shape violating the network shape ledger."""

    def __init__(self, layer: str, expected: Any, actual: Any, context: ErrorContext | None = None):
        """Initialize network shape error."""
        context = context or ErrorContext()
        context.extra.update({"layer": layer, "expected": str(expected), "actual": str(actual)})
        super().__init__(
            f"Layer '{layer}': expected shape {expected}, got {actual}",
            ErrorType.NETWORK_ERROR,
            ErrorCode.SHAPE_MISMATCH,
            EXIT_INPUT,
            context,
        )


class WeightFileError(BaseError):
    """Weight file error."""

    def __init__(self, reason: str, context: ErrorContext | None = None):
        """Initialize weight file error."""
        super().__init__(
            f"Invalid weight file: {reason}",
            ErrorType.FORMAT_ERROR,
            ErrorCode.INVALID_WEIGHT_FILE,
            EXIT_INPUT,
            context,
        )


# Training errors
class TrainingError(BaseError):
    """Training error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.TOO_FEW_SLICES,
    ):
        """Initialize training error."""
        super().__init__(message, ErrorType.TRAINING_ERROR, code, EXIT_NUMERICAL, context)


class TooFewSlicesError(TrainingError):
    """Not enough slices for a train/validation split."""

    def __init__(self, total: int, validation: int, context: ErrorContext | None = None):
        """Initialize too few slices error."""
        super().__init__(
            f"{total} slices cannot be split into {validation} validation and "
            f"{total - validation} training slices",
            context,
            ErrorCode.TOO_FEW_SLICES,
        )


class NonFiniteGradientError(TrainingError):
    """Gradient with NaN or infinite entries."""

    def __init__(self, parameter: str, context: ErrorContext | None = None):
        """Initialize non-finite gradient error."""
        context = context or ErrorContext()
        context.extra["parameter"] = parameter
        super().__init__(
            f"Non-finite gradient for parameter '{parameter}'",
            context,
            ErrorCode.NON_FINITE_GRADIENT,
        )


# Coil errors
class CoilError(BaseError):
    """Coil model error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.DEGENERATE_PLACEMENT,
        exit_code: int = EXIT_USAGE,
    ):
        """Initialize coil error."""
        super().__init__(message, ErrorType.COIL_ERROR, code, exit_code, context)


class DegeneratePlacementError(CoilError):
    """Coil placement with zero normal or invalid geometry."""

    def __init__(self, reason: str, context: ErrorContext | None = None):
        """Initialize degenerate placement error."""
        super().__init__(f"Degenerate coil placement: {reason}", context)


class SingularEvaluationError(CoilError):
    """Evaluation point on the wire."""

    def __init__(self, distance_m: float, context: ErrorContext | None = None):
        """Initialize singular evaluation error."""
        context = context or ErrorContext()
        context.extra["distance_m"] = distance_m
        super().__init__(
            f"Evaluation point {distance_m:.3e} m from the wire",
            context,
            ErrorCode.SINGULAR_EVALUATION,
            EXIT_NUMERICAL,
        )


# Solver errors
class SolverError(BaseError):
    """Potential solver error."""

    def __init__(
        self,
        message: str,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.SOLVER_DIVERGED,
        details: dict[str, Any] | None = None,
    ):
        """Initialize solver error."""
        super().__init__(message, ErrorType.SOLVER_ERROR, code, EXIT_NUMERICAL, context, details)


class SolverDivergenceError(SolverError):
    """Residual grew over consecutive cycles."""

    def __init__(self, cycle: int, history: list[float], context: ErrorContext | None = None):
        """Initialize solver divergence error."""
        super().__init__(
            f"Solver diverged at cycle {cycle}",
            context,
            ErrorCode.SOLVER_DIVERGED,
            {"residualHistory": history},
        )


class ZeroDiagonalError(SolverError):
    """Active node without conductance."""

    def __init__(self, count: int, context: ErrorContext | None = None):
        """Initialize zero diagonal error."""
        super().__init__(
            f"{count} active node(s) have a non-positive diagonal", context, ErrorCode.ZERO_DIAGONAL
        )


class NegativeConductivityError(SolverError):
    """Negative conductivity in an assembled system."""

    def __init__(self, minimum: float, context: ErrorContext | None = None):
        """Initialize negative conductivity error."""
        super().__init__(
            f"Conductivity must be non-negative, minimum is {minimum:g} S/m",
            context,
            ErrorCode.NEGATIVE_CONDUCTIVITY,
        )


# Metric errors
class EmptyRegionError(BaseError):
    """Region mask selecting no voxel."""

    def __init__(self, region: str, context: ErrorContext | None = None):
        """Initialize empty region error."""
        super().__init__(
            f"Region '{region}' contains no voxel",
            ErrorType.METRIC_ERROR,
            ErrorCode.EMPTY_REGION,
            EXIT_NUMERICAL,
            context,
        )


class UndefinedMetricError(BaseError):
    """Metric without a defined value for the inputs."""

    def __init__(self, message: str, context: ErrorContext | None = None):
        """Initialize undefined metric error."""
        super().__init__(
            message, ErrorType.METRIC_ERROR, ErrorCode.UNDEFINED_METRIC, EXIT_NUMERICAL, context
        )


# Unexpected failures
class InternalError(BaseError):
    """Internal error."""

    def __init__(
        self,
        message: str,
        system_details: SystemErrorDetail,
        context: ErrorContext | None = None,
        code: ErrorCode = ErrorCode.INTERNAL_ERROR,
    ):
        """Initialize internal error."""
        super().__init__(
            message,
            ErrorType.SYSTEM_ERROR,
            code,
            EXIT_UNEXPECTED,
            context,
            {"systemDetails": system_details.to_dict()},
            is_operational=False,
        )
        self.system_details = system_details
