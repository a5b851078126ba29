"""Thin-wire figure-eight coil and its magnetic vector potential.

Wire coordinates are millimeters in phantom space. The vector potential of a
straight segment carrying unit current is evaluated in closed form::

    A = mu0 / (4 pi) * u * ln((a + b + L) / (a + b - L))

with ``u`` the segment direction, ``L`` its length and ``a``, ``b`` the
distances from the evaluation point to both ends. The logarithm is a ratio of
lengths, so A comes out in T*m/A regardless of the length unit.
"""

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from condfield.core.grid import VectorGrid, voxel_centers_mm
from condfield.core.keyvalue import (
    floats,
    format_key_values,
    parse_key_values,
    read_key_values,
)
from condfield.exceptions.custom_errors import (
    ConfigurationError,
    DegeneratePlacementError,
    SingularEvaluationError,
    ValidationError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import CoilPlacement, CoilSpec, parse_config
from condfield.services import PerformanceLogger, coil_logger

MU0_OVER_4PI = 1e-7
MM = 1e-3
# Closest admissible approach to a wire, meters.
SINGULAR_DISTANCE_M = 1e-9
# Evaluation points per work item.
CHUNK_POINTS = 4096


@dataclass(frozen=True)
class WirePath:
    """Closed polylines in the order the current flows.

    ``loops[k]`` has shape ``(n + 1, 3)`` with its last point equal to the first.
    ``circulation[k]`` is +1 for counterclockwise flow about ``normal``.
    """

    loops: tuple[npt.NDArray[np.float64], ...]
    circulation: tuple[int, ...]
    normal: npt.NDArray[np.float64]
    center_mm: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        for loop in self.loops:
            if loop.ndim != 2 or loop.shape[1] != 3 or loop.shape[0] < 4:
                raise ValidationError("Each wire loop needs at least 3 distinct points")
            if np.any(np.linalg.norm(np.diff(loop, axis=0), axis=1) <= 0.0):
                raise ValidationError("Wire loops must not contain zero-length segments")

    @property
    def starts(self) -> npt.NDArray[np.float64]:
        return np.concatenate([loop[:-1] for loop in self.loops])

    @property
    def ends(self) -> npt.NDArray[np.float64]:
        return np.concatenate([loop[1:] for loop in self.loops])

    @property
    def length_mm(self) -> float:
        return float(np.linalg.norm(self.ends - self.starts, axis=1).sum())


def _unit(vector: Sequence[float], what: str) -> npt.NDArray[np.float64]:
    v = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if not np.isfinite(norm) or norm < 1e-12:
        raise DegeneratePlacementError(
            f"{what} has zero length", ErrorContext(operation="build_figure_eight")
        )
    return v / norm


def _rotate(vector: npt.NDArray, axis: npt.NDArray, angle: float) -> npt.NDArray:
    """Rodrigues rotation of ``vector`` about the unit ``axis``."""
    return (
        vector * np.cos(angle)
        + np.cross(axis, vector) * np.sin(angle)
        + axis * np.dot(axis, vector) * (1.0 - np.cos(angle))
    )


def coil_frame(placement: CoilPlacement) -> tuple[npt.NDArray, npt.NDArray, npt.NDArray]:
    """In-plane axes ``e1`` (loop to loop), ``e2`` and the normal ``n``."""
    n = _unit(placement.normal, "coil normal")
    reference = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = reference - np.dot(reference, n) * n
    e1 = _rotate(e1 / np.linalg.norm(e1), n, np.deg2rad(placement.angle_deg))
    e2 = np.cross(n, e1)
    return e1, e2, n


def build_figure_eight(
    placement: CoilPlacement,
    outer_diameter_mm: float = 97.0,
    inner_diameter_mm: float = 47.0,
    segments_per_loop: int = 64,
) -> WirePath:
    """Two tangent single-turn loops at the mean winding diameter.

    Loop centers sit at ``center +/- r * e1``; the first loop runs
    counterclockwise about the normal, the second clockwise, so both currents
    flow along ``-e2`` where the loops touch. The coil center is lifted by the
    standoff along the normal.
    """
    if segments_per_loop < 8:
        raise ValidationError(
            f"segments_per_loop must be at least 8, got {segments_per_loop}",
            context=ErrorContext(operation="build_figure_eight"),
        )
    if not 0 < inner_diameter_mm <= outer_diameter_mm:
        raise ValidationError(
            "Coil diameters must satisfy 0 < inner <= outer",
            context=ErrorContext(operation="build_figure_eight"),
        )
    e1, e2, n = coil_frame(placement)
    radius = 0.25 * (outer_diameter_mm + inner_diameter_mm)
    center = np.asarray(placement.center_mm, dtype=np.float64) + placement.standoff_mm * n

    t = 2.0 * np.pi * np.arange(segments_per_loop + 1) / segments_per_loop
    cos_t, sin_t = np.cos(t)[:, None], np.sin(t)[:, None]
    first = center + radius * e1 + radius * (cos_t * e1 + sin_t * e2)
    second = center - radius * e1 + radius * (cos_t * e1 - sin_t * e2)
    first[-1], second[-1] = first[0], second[0]

    return WirePath(loops=(first, second), circulation=(1, -1), normal=n, center_mm=center)


def loop_circulation(loop: npt.NDArray, axis: Sequence[float]) -> float:
    """Signed enclosed area about ``axis`` over the area of the loop's circle.

    +1 for an exactly counterclockwise circle, -1 for clockwise.
    """
    axis_u = np.asarray(axis, dtype=np.float64) / np.linalg.norm(axis)
    area_vector = 0.5 * np.cross(loop[:-1], loop[1:]).sum(axis=0)
    radius = np.linalg.norm(loop[:-1] - loop[:-1].mean(axis=0), axis=1).mean()
    return float(np.dot(area_vector, axis_u) / (np.pi * radius * radius))


def segment_kernel(
    starts: npt.NDArray, ends: npt.NDArray, points: npt.NDArray
) -> npt.NDArray[np.float64]:
    """Vector potential per unit current at ``points`` (K, 3) from all segments, shape (K, 3)."""
    seg = ends - starts
    length = np.linalg.norm(seg, axis=1)
    direction = seg / length[:, None]

    r1 = points[:, None, :] - starts[None, :, :]
    r2 = points[:, None, :] - ends[None, :, :]
    a = np.linalg.norm(r1, axis=2)
    b = np.linalg.norm(r2, axis=2)

    along = np.clip(np.einsum("kmi,mi->km", r1, direction), 0.0, length[None, :])
    nearest = np.linalg.norm(r1 - along[:, :, None] * direction[None, :, :], axis=2)
    closest_m = float(nearest.min()) * MM if nearest.size else np.inf
    if closest_m < SINGULAR_DISTANCE_M:
        raise SingularEvaluationError(closest_m, ErrorContext(operation="vector_potential"))

    weight = 2.0 * np.arctanh(length[None, :] / (a + b))
    return MU0_OVER_4PI * weight @ direction


def vector_potential(wire: WirePath, points: npt.ArrayLike, current: float = 1.0) -> npt.NDArray:
    """Magnetic vector potential [T*m] at ``points`` (mm) for ``current`` amperes."""
    p = np.asarray(points, dtype=np.float64)
    flat = p.reshape(-1, 3)
    starts, ends = wire.starts, wire.ends
    out = np.empty_like(flat)
    for lo in range(0, len(flat), CHUNK_POINTS):
        out[lo : lo + CHUNK_POINTS] = segment_kernel(starts, ends, flat[lo : lo + CHUNK_POINTS])
    return current * out.reshape(p.shape)


def dA_dt_field(
    wire: WirePath,
    didt: float,
    dims: tuple[int, int, int],
    voxel_size: float = 1.0,
    threads: int = 1,
) -> VectorGrid:
    """dA/dt [V/m] at every voxel center for a current slope of ``didt`` A/s."""
    if not np.isfinite(didt):
        raise ValidationError(
            f"dI/dt must be finite, got {didt}", context=ErrorContext(operation="dA_dt_field")
        )
    perf = PerformanceLogger(coil_logger, "dA_dt_field")
    x, y, z = voxel_centers_mm(dims, voxel_size)
    points = np.stack(np.broadcast_arrays(x, y, z), axis=-1).reshape(-1, 3)
    starts, ends = wire.starts, wire.ends
    chunks = [points[lo : lo + CHUNK_POINTS] for lo in range(0, len(points), CHUNK_POINTS)]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(lambda chunk: segment_kernel(starts, ends, chunk), chunks))
    field = didt * np.concatenate(parts).reshape(*dims, 3)

    perf.finish(
        additional_data={"voxels": len(points), "segments": len(starts), "threads": threads}
    )
    return VectorGrid(field, voxel_size)


def uniform_dbdt_field(
    dbdt: Sequence[float],
    center_mm: Sequence[float],
    dims: tuple[int, int, int],
    voxel_size: float = 1.0,
) -> VectorGrid:
    """dA/dt = (dB/dt x r) / 2 for a spatially uniform flux change [T/s], r in meters."""
    x, y, z = voxel_centers_mm(dims, voxel_size)
    cx, cy, cz = (float(c) for c in center_mm)
    r = np.stack(np.broadcast_arrays((x - cx) * MM, (y - cy) * MM, (z - cz) * MM), axis=-1)
    field = 0.5 * np.cross(np.asarray(dbdt, dtype=np.float64), r)
    return VectorGrid(field, voxel_size)


def coil_spec_from_values(values: dict[str, str], source: str = "<text>") -> CoilSpec:
    known = {
        "center", "normal", "angle_deg", "standoff_mm", "outer_diameter_mm",
        "inner_diameter_mm", "segments_per_loop", "didt",
    }  # fmt: skip
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(
            f"{source}: unknown coil keys {unknown}",
            ErrorContext(operation="read_coil_spec", path=source),
        )
    placement = {
        "center_mm": floats(values.get("center", "0 0 0"), 3, "center"),
        "normal": floats(values.get("normal", "0 0 1"), 3, "normal"),
        "angle_deg": float(values.get("angle_deg", 0.0)),
        "standoff_mm": float(values.get("standoff_mm", 0.0)),
    }
    data: dict[str, object] = {"placement": placement}
    for key in ("outer_diameter_mm", "inner_diameter_mm", "didt"):
        if key in values:
            data[key] = float(values[key])
    if "segments_per_loop" in values:
        data["segments_per_loop"] = int(values["segments_per_loop"])
    return parse_config(CoilSpec, data, operation="read_coil_spec")


def parse_coil_spec(text: str, source: str = "<text>") -> CoilSpec:
    return coil_spec_from_values(parse_key_values(text, source), source)


def read_coil_spec(path: str | Path) -> CoilSpec:
    return coil_spec_from_values(read_key_values(path), str(path))


def format_coil_spec(spec: CoilSpec) -> str:
    p = spec.placement
    return format_key_values(
        [
            ("center", p.center_mm),
            ("normal", p.normal),
            ("angle_deg", p.angle_deg),
            ("standoff_mm", p.standoff_mm),
            ("outer_diameter_mm", spec.outer_diameter_mm),
            ("inner_diameter_mm", spec.inner_diameter_mm),
            ("segments_per_loop", spec.segments_per_loop),
            ("didt", spec.didt),
        ]
    )


def write_coil_spec(spec: CoilSpec, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_coil_spec(spec), encoding="ascii")
    return path


def wire_from_spec(spec: CoilSpec) -> WirePath:
    return build_figure_eight(
        spec.placement, spec.outer_diameter_mm, spec.inner_diameter_mm, spec.segments_per_loop
    )
