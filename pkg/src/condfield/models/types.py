"""Type definitions for CondField configurations and reports."""

from enum import Enum
from typing import Any, Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from condfield.exceptions.custom_errors import ConfigurationError
from condfield.exceptions.types import ErrorContext

Triple = tuple[float, float, float]
IntTriple = tuple[int, int, int]


class Axis(str, Enum):
    """Slicing direction through a volume."""

    AXIAL = "axial"
    SAGITTAL = "sagittal"
    CORONAL = "coronal"


# Phantom models
class ShellSpec(BaseModel):
    """One ellipsoidal tissue shell with its MRI contrast."""

    tissue_id: int = Field(..., ge=1, le=65535)
    semi_axes_mm: Triple
    center_mm: Triple
    t1_mean: float
    t2_mean: float
    t1_noise: float = Field(default=0.0, ge=0.0)
    t2_noise: float = Field(default=0.0, ge=0.0)

    @field_validator("semi_axes_mm")
    @classmethod
    def _positive_axes(cls, value: Triple) -> Triple:
        if any(a <= 0 for a in value):
            raise ValueError("semi-axes must be positive")
        return value


class PhantomSpec(BaseModel):
    """Nested-ellipsoid head phantom, outermost shell first."""

    dims: IntTriple = (64, 64, 64)
    voxel_size: float = Field(default=1.0, gt=0.0)
    shells: list[ShellSpec] = Field(..., min_length=1)
    air_t1: float = 0.0
    air_t2: float = 0.0
    air_noise: float = Field(default=0.0, ge=0.0)
    seed: int = Field(default=0, ge=0)

    @field_validator("dims")
    @classmethod
    def _positive_dims(cls, value: IntTriple) -> IntTriple:
        if any(n <= 0 for n in value):
            raise ValueError("dims must be positive")
        return value

    @field_validator("shells")
    @classmethod
    def _distinct_tissues(cls, value: list[ShellSpec]) -> list[ShellSpec]:
        ids = [s.tissue_id for s in value]
        if len(set(ids)) != len(ids):
            raise ValueError(f"tissue ids must be distinct, got {ids}")
        return value


# Conductor models
class NormParams(BaseModel):
    """Conductor normalization parameters."""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(default=0.1, gt=0.0, lt=1.0)
    sigma_max: float = Field(..., gt=0.0)

    @property
    def scale(self) -> float:
        """Factor mapping S/m onto the normalized range [0, 1 - tau]."""
        return (1.0 - self.tau) / self.sigma_max


class ConductivityStats(BaseModel):
    """Order statistics of conductivity inside a region."""

    region: str
    count: int
    mean: float
    std: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


# Network models
class NetConfig(BaseModel):
    """Encoder/decoder layout of the conductivity network.

    Kernel lists are indexed by level ``i - 1`` for ``i = 1 .. depth - 1``;
    ``map_kernels`` holds one kernel per decoder for the output projection.
    """

    encoders: int = Field(default=2, ge=1)
    decoders: int = Field(default=1, ge=1)
    depth: int = Field(default=4, ge=2)
    size_power: int = Field(default=6, ge=2, le=12)
    encoder_kernels: list[list[int]] = Field(default_factory=list)
    decoder_kernels: list[list[int]] = Field(default_factory=list)
    map_kernels: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _fill_default_kernels(self) -> "NetConfig":
        levels = max(self.depth - 1, 0)
        if not self.encoder_kernels:
            self.encoder_kernels = [[3] * levels for _ in range(self.encoders)]
        if not self.decoder_kernels:
            self.decoder_kernels = [[5] * levels for _ in range(self.decoders)]
        if not self.map_kernels:
            self.map_kernels = [5] * self.decoders
        return self

    @property
    def slice_size(self) -> int:
        """Side length N of the square input slices."""
        return 2**self.size_power

    def ledger_errors(self) -> list[str]:
        """Structural problems that make the layout unbuildable."""
        errors: list[str] = []
        if self.size_power - self.depth < 1:
            errors.append(
                f"depth {self.depth} too large for slice size 2^{self.size_power}: "
                "the hub needs at least 2x2 pixels"
            )
        levels = self.depth - 1
        for name, table, count in (
            ("encoder_kernels", self.encoder_kernels, self.encoders),
            ("decoder_kernels", self.decoder_kernels, self.decoders),
        ):
            if len(table) != count:
                errors.append(f"{name} needs {count} rows, got {len(table)}")
            for row in table:
                if len(row) != levels:
                    errors.append(f"{name} rows need {levels} entries, got {len(row)}")
        if len(self.map_kernels) != self.decoders:
            errors.append(f"map_kernels needs {self.decoders} entries")
        kernels = [k for row in self.encoder_kernels + self.decoder_kernels for k in row]
        if any(k < 1 or k % 2 == 0 for k in kernels + list(self.map_kernels)):
            errors.append("kernels must be odd positive integers")
        return errors


class AdamConfig(BaseModel):
    """Adaptive moment estimation hyperparameters."""

    step_size: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)


class TrainConfig(BaseModel):
    """Training protocol."""

    epochs: int = Field(default=50, ge=1)
    batch_size: int = Field(default=4, ge=1)
    validation_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    adam: AdamConfig = Field(default_factory=AdamConfig)
    seed: int = Field(default=0, ge=0)


class LossCurve(BaseModel):
    """Per-epoch mean losses."""

    train: list[float] = Field(default_factory=list)
    validation: list[float] = Field(default_factory=list)
    train_slices: int = 0
    validation_slices: int = 0


# Coil models
class CoilPlacement(BaseModel):
    """Coil position and orientation in phantom coordinates."""

    center_mm: Triple = (0.0, 0.0, 0.0)
    normal: Triple = (0.0, 0.0, 1.0)
    angle_deg: float = 0.0
    standoff_mm: float = 0.0


class CoilSpec(BaseModel):
    """Figure-eight coil description."""

    placement: CoilPlacement = Field(default_factory=CoilPlacement)
    outer_diameter_mm: float = Field(default=97.0, gt=0.0)
    inner_diameter_mm: float = Field(default=47.0, gt=0.0)
    segments_per_loop: int = Field(default=64, ge=8)
    didt: float = 6.7e7

    @model_validator(mode="after")
    def _ordered_diameters(self) -> "CoilSpec":
        if self.inner_diameter_mm > self.outer_diameter_mm:
            raise ValueError("inner diameter exceeds outer diameter")
        return self


# Solver models
class SolveConfig(BaseModel):
    """Multigrid solver settings."""

    tolerance: float = Field(default=1e-6, gt=0.0)
    max_cycles: int = Field(default=50, ge=1)
    pre_sweeps: int = Field(default=2, ge=0)
    post_sweeps: int = Field(default=2, ge=0)
    omega: float = Field(default=1.5, gt=0.0, lt=2.0)
    coarsest_cells: int = Field(default=4, ge=1)
    coarsest_sweeps: int = Field(default=200, ge=1)
    krylov: bool = True


class SolveStats(BaseModel):
    """Outcome of a potential solve."""

    cycles: int
    final_relative_residual: float
    residual_history: list[float]
    converged: bool
    levels: int


# Metric models
class GlobalErrorResult(BaseModel):
    """Region-normalized mean absolute field difference."""

    region: str
    ge_percent: float
    mean_percent: float
    std_percent: float
    normalizer: float
    voxels: int


# Run bookkeeping
class RunManifest(BaseModel):
    """Record of one command run."""

    run_id: str
    command: str
    argv: list[str]
    tool_version: str
    started_at: str
    seeds: dict[str, int] = Field(default_factory=dict)
    configs: dict[str, Any] = Field(default_factory=dict)
    inputs: list[str] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    stage_timings_ms: dict[str, float] = Field(default_factory=dict)
    threads: int = 1
    notes: Optional[str] = None


ModelT = TypeVar("ModelT", bound=BaseModel)


def parse_config(model: type[ModelT], data: dict[str, Any], operation: str | None = None) -> ModelT:
    """Validate ``data`` into ``model``, reporting violations as ConfigurationError."""
    try:
        return model.model_validate(data)
    except ValidationError as error:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in e['loc']) or model.__name__}: {e['msg']}"
            for e in error.errors()
        )
        raise ConfigurationError(
            f"Invalid {model.__name__}: {problems}",
            ErrorContext(operation=operation, component="config"),
        ) from error
