"""NVV1 volume file reader and writer.

Layout::

    NVV1
    dtype <f32|u16|vec3f32|u8>
    dims nx ny nz
    voxel_mm s
    end
    <little-endian payload, x fastest>

Vector grids store their three components consecutively per voxel. Scalar
grids are held in float64 and stored as f32, so a write/read pair is the
identity for any value representable in single precision.
"""

from pathlib import Path
from typing import Union

import numpy as np
import numpy.typing as npt

from condfield.core.grid import LabelGrid, RegionMask, ScalarGrid, VectorGrid
from condfield.exceptions.custom_errors import (
    InputFileNotFoundError,
    MalformedHeaderError,
    PayloadSizeError,
    UnknownDtypeError,
    VolumeFormatError,
)
from condfield.exceptions.types import ErrorContext
from condfield.services import grid_logger

MAGIC = "NVV1"
HEADER_LINES = 5

Volume = Union[ScalarGrid, LabelGrid, VectorGrid, RegionMask]

_DTYPES: dict[str, tuple[np.dtype, int]] = {
    "f32": (np.dtype("<f4"), 1),
    "u16": (np.dtype("<u2"), 1),
    "vec3f32": (np.dtype("<f4"), 3),
    "u8": (np.dtype("u1"), 1),
}


def _dtype_code(grid: Volume) -> str:
    if isinstance(grid, ScalarGrid):
        return "f32"
    if isinstance(grid, LabelGrid):
        return "u16"
    if isinstance(grid, VectorGrid):
        return "vec3f32"
    if isinstance(grid, RegionMask):
        return "u8"
    raise VolumeFormatError(f"Cannot store object of type {type(grid).__name__}")


def _x_fastest(array: npt.NDArray) -> npt.NDArray:
    """Flatten ``[x, y, z]`` or ``[x, y, z, c]`` with c then x varying fastest."""
    if array.ndim == 4:
        return np.moveaxis(array, 3, 0).ravel(order="F")
    return array.ravel(order="F")


def encode_volume(grid: Volume) -> bytes:
    """Serialize a grid to NVV1 bytes."""
    code = _dtype_code(grid)
    dtype, _ = _DTYPES[code]
    nx, ny, nz = grid.dims
    header = (
        f"{MAGIC}\n"
        f"dtype {code}\n"
        f"dims {nx} {ny} {nz}\n"
        f"voxel_mm {float(grid.voxel_size)!r}\n"
        "end\n"
    ).encode("ascii")
    payload = _x_fastest(np.asarray(grid.data)).astype(dtype).tobytes()
    return header + payload


def write_volume(grid: Volume, path: str | Path) -> Path:
    """Write a grid to ``path`` in NVV1 format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_volume(grid)
    path.write_bytes(data)
    grid_logger.debug(
        type="volume_written",
        path=str(path),
        dtype=_dtype_code(grid),
        dims=list(grid.dims),
        size=len(data),
        msg=f"Volume written: {path}",
    )
    return path


def _split_header(raw: bytes, context: ErrorContext) -> tuple[list[str], bytes]:
    lines: list[str] = []
    offset = 0
    for _ in range(HEADER_LINES):
        end = raw.find(b"\n", offset)
        if end < 0:
            raise MalformedHeaderError("truncated header", context)
        try:
            lines.append(raw[offset:end].decode("ascii"))
        except UnicodeDecodeError as error:
            raise MalformedHeaderError("non-ASCII header", context) from error
        offset = end + 1
    return lines, raw[offset:]


def _parse_header(
    lines: list[str], context: ErrorContext
) -> tuple[str, tuple[int, int, int], float]:
    if lines[0] != MAGIC:
        raise MalformedHeaderError(f"expected magic '{MAGIC}', got '{lines[0][:16]}'", context)
    if lines[4] != "end":
        raise MalformedHeaderError("missing 'end' line", context)

    dtype_parts = lines[1].split()
    if len(dtype_parts) != 2 or dtype_parts[0] != "dtype":
        raise MalformedHeaderError(f"bad dtype line '{lines[1]}'", context)
    code = dtype_parts[1]
    if code not in _DTYPES:
        raise UnknownDtypeError(code, context)

    dims_parts = lines[2].split()
    if len(dims_parts) != 4 or dims_parts[0] != "dims":
        raise MalformedHeaderError(f"bad dims line '{lines[2]}'", context)
    try:
        dims = tuple(int(v) for v in dims_parts[1:])
    except ValueError as error:
        raise MalformedHeaderError(f"non-integer dims '{lines[2]}'", context) from error
    if any(n <= 0 for n in dims):
        raise MalformedHeaderError(f"non-positive dims '{lines[2]}'", context)

    voxel_parts = lines[3].split()
    if len(voxel_parts) != 2 or voxel_parts[0] != "voxel_mm":
        raise MalformedHeaderError(f"bad voxel_mm line '{lines[3]}'", context)
    try:
        voxel_size = float(voxel_parts[1])
    except ValueError as error:
        raise MalformedHeaderError(f"non-numeric voxel size '{lines[3]}'", context) from error
    if not voxel_size > 0:
        raise MalformedHeaderError(f"non-positive voxel size '{lines[3]}'", context)
    return code, dims, voxel_size  # type: ignore[return-value]


def decode_volume(raw: bytes, source: str = "<bytes>") -> Volume:
    """Parse NVV1 bytes into the matching grid type."""
    context = ErrorContext(operation="read_volume", path=source)
    lines, payload = _split_header(raw, context)
    code, dims, voxel_size = _parse_header(lines, context)
    dtype, components = _DTYPES[code]

    count = dims[0] * dims[1] * dims[2] * components
    expected = count * dtype.itemsize
    if len(payload) != expected:
        raise PayloadSizeError(expected, len(payload), context)

    flat = np.frombuffer(payload, dtype=dtype, count=count)
    if components == 3:
        array = np.moveaxis(flat.reshape((3, *dims), order="F"), 0, 3)
        return VectorGrid(array.astype(np.float64), voxel_size)
    array = flat.reshape(dims, order="F")
    if code == "f32":
        return ScalarGrid(array.astype(np.float64), voxel_size)
    if code == "u16":
        return LabelGrid(array.astype(np.uint16), voxel_size)
    return RegionMask(array != 0, name=Path(source).stem, voxel_size=voxel_size)


def read_volume(path: str | Path) -> Volume:
    """Read an NVV1 file."""
    path = Path(path)
    if not path.is_file():
        raise InputFileNotFoundError(str(path), ErrorContext(operation="read_volume"))
    grid = decode_volume(path.read_bytes(), str(path))
    grid_logger.debug(
        type="volume_read",
        path=str(path),
        dims=list(grid.dims),
        msg=f"Volume read: {path}",
    )
    return grid


def read_scalar(path: str | Path) -> ScalarGrid:
    """Read a volume that must hold one real value per voxel."""
    grid = read_volume(path)
    if isinstance(grid, LabelGrid):
        return ScalarGrid(grid.data.astype(np.float64), grid.voxel_size)
    if not isinstance(grid, ScalarGrid):
        raise VolumeFormatError(
            f"'{path}' holds {type(grid).__name__}, expected a scalar volume",
            ErrorContext(operation="read_scalar", path=str(path)),
        )
    return grid


def read_labels(path: str | Path) -> LabelGrid:
    """Read a tissue label volume."""
    grid = read_volume(path)
    if not isinstance(grid, LabelGrid):
        raise VolumeFormatError(
            f"'{path}' holds {type(grid).__name__}, expected labels",
            ErrorContext(operation="read_labels", path=str(path)),
        )
    return grid


def read_vector(path: str | Path) -> VectorGrid:
    """Read a three-component volume."""
    grid = read_volume(path)
    if not isinstance(grid, VectorGrid):
        raise VolumeFormatError(
            f"'{path}' holds {type(grid).__name__}, expected a vector volume",
            ErrorContext(operation="read_vector", path=str(path)),
        )
    return grid


def read_region(path: str | Path, name: str | None = None) -> RegionMask:
    """Read any volume as a region: non-zero voxels are inside."""
    grid = read_volume(path)
    label = name or Path(path).stem
    if isinstance(grid, RegionMask):
        return RegionMask(grid.data, label, grid.voxel_size)
    if isinstance(grid, VectorGrid):
        raise VolumeFormatError(
            f"'{path}' holds a vector volume, expected a region",
            ErrorContext(operation="read_region", path=str(path)),
        )
    return RegionMask(np.asarray(grid.data) != 0, label, grid.voxel_size)
