"""Voxel grid containers, slicing and MRI intensity normalization.

Arrays are indexed ``[x, y, z]``. Voxel ``i`` along an axis has its center at
``(i + 0.5) * voxel_size`` millimeters. Grids are frozen: their arrays are
marked read-only on construction.
"""

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from condfield.exceptions.custom_errors import (
    DegenerateInputError,
    DimensionMismatchError,
    GridError,
    GridIndexError,
    NonFiniteValueError,
)
from condfield.exceptions.types import ErrorCode, ErrorContext
from condfield.models.types import Axis

Dims = tuple[int, int, int]

# Which array axis a slicing direction walks along.
AXIS_INDEX: dict[Axis, int] = {Axis.SAGITTAL: 0, Axis.CORONAL: 1, Axis.AXIAL: 2}


def _frozen(array: npt.NDArray, dtype: npt.DTypeLike) -> npt.NDArray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def _check_geometry(dims: Dims, voxel_size: float, what: str) -> None:
    if len(dims) != 3 or any(int(n) <= 0 for n in dims):
        raise GridError(f"{what}: dims must be three positive integers, got {dims}")
    if not voxel_size > 0 or not np.isfinite(voxel_size):
        raise GridError(
            f"{what}: voxel size must be positive, got {voxel_size}",
            code=ErrorCode.INVALID_FIELD_VALUE,
        )


@dataclass(frozen=True)
class ScalarGrid:
    """Real value per voxel (intensity, conductivity, potential, field magnitude)."""

    data: npt.NDArray[np.float64]
    voxel_size: float = 1.0

    def __post_init__(self) -> None:
        data = _frozen(self.data, np.float64)
        if data.ndim != 3:
            raise GridError(f"ScalarGrid needs a 3-D array, got {data.ndim}-D")
        _check_geometry(data.shape, self.voxel_size, "ScalarGrid")
        if not np.all(np.isfinite(data)):
            raise NonFiniteValueError("ScalarGrid")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "voxel_size", float(self.voxel_size))

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape)  # type: ignore[return-value]

    @classmethod
    def zeros(cls, dims: Dims, voxel_size: float = 1.0) -> "ScalarGrid":
        return cls(np.zeros(dims), voxel_size)

    def like(self, data: npt.NDArray) -> "ScalarGrid":
        """New grid with this grid's voxel size."""
        return ScalarGrid(data, self.voxel_size)


@dataclass(frozen=True)
class VectorGrid:
    """Three real components per voxel, stored as ``[x, y, z, component]``."""

    data: npt.NDArray[np.float64]
    voxel_size: float = 1.0

    def __post_init__(self) -> None:
        data = _frozen(self.data, np.float64)
        if data.ndim != 4 or data.shape[3] != 3:
            raise GridError(f"VectorGrid needs shape (nx, ny, nz, 3), got {data.shape}")
        _check_geometry(data.shape[:3], self.voxel_size, "VectorGrid")
        if not np.all(np.isfinite(data)):
            raise NonFiniteValueError("VectorGrid")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "voxel_size", float(self.voxel_size))

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape[:3])  # type: ignore[return-value]

    def magnitude(self) -> ScalarGrid:
        return ScalarGrid(np.sqrt(np.sum(self.data * self.data, axis=3)), self.voxel_size)


@dataclass(frozen=True)
class LabelGrid:
    """Tissue identifier per voxel; 0 is air."""

    data: npt.NDArray[np.uint16]
    voxel_size: float = 1.0

    def __post_init__(self) -> None:
        raw = np.asarray(self.data)
        if raw.ndim != 3:
            raise GridError(f"LabelGrid needs a 3-D array, got {raw.ndim}-D")
        if raw.size and (raw.min() < 0 or raw.max() > np.iinfo(np.uint16).max):
            raise GridError("LabelGrid identifiers must fit in 16 unsigned bits")
        data = _frozen(raw, np.uint16)
        _check_geometry(data.shape, self.voxel_size, "LabelGrid")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "voxel_size", float(self.voxel_size))

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape)  # type: ignore[return-value]

    def histogram(self) -> dict[int, int]:
        """Voxel count per identifier present."""
        ids, counts = np.unique(self.data, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts, strict=True)}


@dataclass(frozen=True)
class RegionMask:
    """Boolean voxel selection with a name."""

    data: npt.NDArray[np.bool_]
    name: str = "region"
    voxel_size: float = 1.0

    def __post_init__(self) -> None:
        data = _frozen(self.data, np.bool_)
        if data.ndim != 3:
            raise GridError(f"RegionMask needs a 3-D array, got {data.ndim}-D")
        _check_geometry(data.shape, self.voxel_size, "RegionMask")
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape)  # type: ignore[return-value]

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    def is_disjoint(self, other: "RegionMask") -> bool:
        require_same_dims(self.dims, other.dims)
        return not bool(np.any(self.data & other.data))


@dataclass(frozen=True)
class Slice2D:
    """One plane of a volume."""

    axis: Axis
    index: int
    data: npt.NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        data = _frozen(self.data, np.float64)
        if data.ndim != 2:
            raise GridError(f"Slice2D needs a 2-D array, got {data.ndim}-D")
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> tuple[int, int]:
        return int(self.data.shape[0]), int(self.data.shape[1])


def require_same_dims(expected: tuple[int, ...], actual: tuple[int, ...], what: str = "") -> None:
    """Raise DimensionMismatchError unless the two shapes agree."""
    if tuple(expected) != tuple(actual):
        raise DimensionMismatchError(expected, actual, ErrorContext(operation=what or None))


def voxel_centers_mm(dims: Dims, voxel_size: float) -> tuple[npt.NDArray, npt.NDArray, npt.NDArray]:
    """Broadcastable center coordinates of every voxel."""
    axes = [(np.arange(n, dtype=np.float64) + 0.5) * voxel_size for n in dims]
    return (
        axes[0][:, None, None],
        axes[1][None, :, None],
        axes[2][None, None, :],
    )


def slice_count(dims: Dims, axis: Axis) -> int:
    """Number of planes along a slicing direction."""
    return dims[AXIS_INDEX[axis]]


def _plane(axis: Axis, k: int) -> tuple[slice | int, ...]:
    index: list[slice | int] = [slice(None)] * 3
    index[AXIS_INDEX[axis]] = k
    return tuple(index)


def slice_extract(grid: ScalarGrid, axis: Axis | str, k: int) -> Slice2D:
    """Extract plane ``k`` along ``axis``.

    Axial planes are ``(x, y)``, sagittal ``(y, z)`` and coronal ``(x, z)``.
    """
    axis = Axis(axis)
    extent = slice_count(grid.dims, axis)
    if not 0 <= k < extent:
        raise GridIndexError(k, extent, ErrorContext(operation="slice_extract", axis=axis.value))
    return Slice2D(axis, int(k), grid.data[_plane(axis, k)])


def slice_insert(grid: ScalarGrid, plane: Slice2D) -> ScalarGrid:
    """Copy of ``grid`` with the plane at ``plane.index`` replaced."""
    extent = slice_count(grid.dims, plane.axis)
    if not 0 <= plane.index < extent:
        raise GridIndexError(
            plane.index, extent, ErrorContext(operation="slice_insert", axis=plane.axis.value)
        )
    target = grid.data[_plane(plane.axis, plane.index)]
    require_same_dims(target.shape, plane.dims, "slice_insert")
    data = np.array(grid.data)
    data[_plane(plane.axis, plane.index)] = plane.data
    return grid.like(data)


def stack_slices(planes: npt.NDArray, axis: Axis | str, voxel_size: float = 1.0) -> ScalarGrid:
    """Assemble a volume from planes ordered by index, shape ``(K, p, q)``."""
    axis = Axis(axis)
    return ScalarGrid(np.moveaxis(np.asarray(planes), 0, AXIS_INDEX[axis]), voxel_size)


def volume_planes(grid: ScalarGrid, axis: Axis | str) -> npt.NDArray[np.float64]:
    """All planes along ``axis`` as an array of shape ``(K, p, q)``."""
    return np.moveaxis(grid.data, AXIS_INDEX[Axis(axis)], 0)


def normalize_mri(grid: ScalarGrid) -> ScalarGrid:
    """Z-score the volume, then rescale it min-max onto [0, 1]."""
    data = grid.data
    std = float(data.std())
    if std == 0.0 or not np.isfinite(std):
        raise DegenerateInputError(
            "Cannot normalize a constant-valued volume", ErrorContext(operation="normalize_mri")
        )
    z = (data - data.mean()) / std
    lo, hi = float(z.min()), float(z.max())
    if hi <= lo:
        raise DegenerateInputError(
            "Volume collapses to a constant after z-scoring",
            ErrorContext(operation="normalize_mri"),
        )
    out = (z - lo) / (hi - lo)
    # pin the endpoints against rounding in the division
    out[z == lo] = 0.0
    out[z == hi] = 1.0
    return grid.like(np.clip(out, 0.0, 1.0))
