"""Synthetic head phantoms built from nested ellipsoidal tissue shells.

Phantom spec files use the key-value grammar of :mod:`condfield.core.keyvalue`::

    dims = 64 64 64          # voxels along x y z
    voxel_mm = 1.0
    seed = 7
    air.t1 = 0.0             # optional, default 0
    air.t2 = 0.0
    air.noise = 0.01         # std of the Gaussian noise in air
    shell.0.tissue = 11      # outermost shell first
    shell.0.semi_axes = 28 30 27
    shell.0.center = 32 32 32
    shell.0.t1 = 0.60
    shell.0.t2 = 0.45
    shell.0.t1_noise = 0.02  # optional, default 0
    shell.0.t2_noise = 0.02
    shell.1.tissue = 7
    ...

Lengths are millimeters; shells must be listed outermost first and each one
must lie strictly inside its predecessor.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import pairwise
from pathlib import Path
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from condfield.core import conductor
from condfield.core.conductor import TissueTable, assign_uniform, normalize_conductor
from condfield.core.grid import LabelGrid, ScalarGrid, normalize_mri, voxel_centers_mm
from condfield.core.keyvalue import (
    floats,
    format_key_values,
    grouped,
    integers,
    parse_key_values,
    read_key_values,
)
from condfield.exceptions.custom_errors import (
    ConfigurationError,
    DimensionMismatchError,
    PhantomSpecError,
)
from condfield.exceptions.types import ErrorCode, ErrorContext
from condfield.models.types import PhantomSpec, ShellSpec, parse_config
from condfield.services import PerformanceLogger, phantom_logger

# Surface sampling density for the nesting check.
_NEST_THETA = 48
_NEST_PHI = 24

_SPEC_KEYS = {"dims", "voxel_mm", "seed", "air.t1", "air.t2", "air.noise"}
_SHELL_KEYS = {"tissue", "semi_axes", "center", "t1", "t2", "t1_noise", "t2_noise"}


class PhantomVolumes(NamedTuple):
    labels: LabelGrid
    t1: ScalarGrid
    t2: ScalarGrid


@dataclass(frozen=True)
class TrainingSample:
    """Normalized network inputs and targets of one subject."""

    inputs: list[ScalarGrid]
    targets: list[ScalarGrid]
    labels: LabelGrid


@dataclass(frozen=True)
class TrainingSet:
    samples: list[TrainingSample]
    tables: list[TissueTable] = field(default_factory=list)
    tau: float = 0.1

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.samples[0].labels.dims


def default_head_spec(
    dims: tuple[int, int, int] = (64, 64, 64),
    voxel_size: float = 1.0,
    seed: int = 0,
    noise: float = 0.02,
) -> PhantomSpec:
    """Seven-shell desk head scaled to fill ``dims``."""
    extent = np.array(dims, dtype=np.float64) * voxel_size
    center = tuple(float(c) for c in extent / 2.0)
    # fractions of the half extent, outermost first
    layers = [
        (conductor.SKIN, (0.875, 0.9375, 0.84), 0.60, 0.45),
        (conductor.FAT, (0.83, 0.89, 0.79), 0.95, 0.60),
        (conductor.BONE_CORTICAL, (0.78, 0.84, 0.75), 0.05, 0.04),
        (conductor.BONE_CANCELLOUS, (0.73, 0.79, 0.70), 0.35, 0.25),
        (conductor.CSF, (0.68, 0.74, 0.65), 0.15, 0.95),
        (conductor.GM, (0.62, 0.68, 0.59), 0.50, 0.55),
        (conductor.WM, (0.46, 0.52, 0.43), 0.75, 0.35),
    ]
    shells = [
        ShellSpec(
            tissue_id=tissue,
            semi_axes_mm=tuple(float(f * e / 2.0) for f, e in zip(fractions, extent, strict=True)),
            center_mm=center,
            t1_mean=t1,
            t2_mean=t2,
            t1_noise=noise,
            t2_noise=noise,
        )
        for tissue, fractions, t1, t2 in layers
    ]
    return PhantomSpec(
        dims=dims, voxel_size=voxel_size, shells=shells, air_noise=noise / 2.0, seed=seed
    )


def jitter_spec(spec: PhantomSpec, seed: int, scale: float = 0.06) -> PhantomSpec:
    """A different subject: per-axis size, position and contrast variations.

    All shells share the per-axis size factor and offset, so nesting is kept.
    """
    rng = np.random.default_rng(seed)
    size = 1.0 + scale * rng.uniform(-1.0, 1.0, size=3)
    shift = spec.voxel_size * rng.uniform(-1.0, 1.0, size=3)
    contrast = 1.0 + 0.5 * scale * rng.uniform(-1.0, 1.0, size=(len(spec.shells), 2))
    shells = [
        shell.model_copy(
            update={
                "semi_axes_mm": tuple(float(a) for a in np.multiply(shell.semi_axes_mm, size)),
                "center_mm": tuple(float(c) for c in np.add(shell.center_mm, shift)),
                "t1_mean": float(shell.t1_mean * contrast[n, 0]),
                "t2_mean": float(shell.t2_mean * contrast[n, 1]),
            }
        )
        for n, shell in enumerate(spec.shells)
    ]
    return spec.model_copy(update={"shells": shells, "seed": int(seed)})


def _inside(
    shell: ShellSpec, x: npt.NDArray, y: npt.NDArray, z: npt.NDArray
) -> npt.NDArray[np.bool_]:
    (a, b, c), (cx, cy, cz) = shell.semi_axes_mm, shell.center_mm
    return ((x - cx) / a) ** 2 + ((y - cy) / b) ** 2 + ((z - cz) / c) ** 2 <= 1.0


def _surface_points(shell: ShellSpec) -> tuple[npt.NDArray, npt.NDArray, npt.NDArray]:
    theta = np.linspace(0.0, np.pi, _NEST_PHI + 1)[:, None]
    phi = np.linspace(0.0, 2.0 * np.pi, _NEST_THETA, endpoint=False)[None, :]
    (a, b, c), (cx, cy, cz) = shell.semi_axes_mm, shell.center_mm
    return (
        cx + a * np.sin(theta) * np.cos(phi),
        cy + b * np.sin(theta) * np.sin(phi),
        cz + c * np.cos(theta) * np.ones_like(phi),
    )


def check_nesting(spec: PhantomSpec) -> None:
    """Raise unless each shell lies strictly inside the previous one."""
    for outer, inner in pairwise(spec.shells):
        x, y, z = _surface_points(inner)
        (a, b, c), (cx, cy, cz) = outer.semi_axes_mm, outer.center_mm
        level = ((x - cx) / a) ** 2 + ((y - cy) / b) ** 2 + ((z - cz) / c) ** 2
        if np.any(level >= 1.0):
            raise PhantomSpecError(
                f"Shell of tissue {inner.tissue_id} is not nested inside tissue {outer.tissue_id}",
                ErrorContext(operation="generate_phantom"),
                ErrorCode.SHELLS_NOT_NESTED,
            )


def generate_phantom(spec: PhantomSpec, table: TissueTable | None = None) -> PhantomVolumes:
    """Labels plus noisy T1/T2 volumes for one phantom spec."""
    table = table or conductor.shipped_table("A")
    missing = [s.tissue_id for s in spec.shells if s.tissue_id not in table.entries]
    if missing:
        raise PhantomSpecError(
            f"Tissue id(s) {missing} not in table '{table.tag}'",
            ErrorContext(operation="generate_phantom"),
            ErrorCode.UNKNOWN_TISSUE,
        )
    check_nesting(spec)

    x, y, z = voxel_centers_mm(spec.dims, spec.voxel_size)
    labels = np.zeros(spec.dims, dtype=np.uint16)
    t1_mean = np.full(spec.dims, spec.air_t1)
    t2_mean = np.full(spec.dims, spec.air_t2)
    t1_std = np.full(spec.dims, spec.air_noise)
    t2_std = np.full(spec.dims, spec.air_noise)
    # outermost first, so inner shells overwrite
    for shell in spec.shells:
        inside = np.broadcast_to(_inside(shell, x, y, z), spec.dims)
        labels[inside] = shell.tissue_id
        t1_mean[inside] = shell.t1_mean
        t2_mean[inside] = shell.t2_mean
        t1_std[inside] = shell.t1_noise
        t2_std[inside] = shell.t2_noise

    rng = np.random.default_rng(spec.seed)
    t1 = t1_mean + t1_std * rng.standard_normal(spec.dims)
    t2 = t2_mean + t2_std * rng.standard_normal(spec.dims)

    phantom_logger.debug(
        type="phantom_generated",
        dims=list(spec.dims),
        shells=len(spec.shells),
        seed=spec.seed,
        msg=f"Phantom generated with {len(spec.shells)} shells",
    )
    return PhantomVolumes(
        LabelGrid(labels, spec.voxel_size),
        ScalarGrid(t1, spec.voxel_size),
        ScalarGrid(t2, spec.voxel_size),
    )


def phantom_dataset(
    specs: list[PhantomSpec],
    tables: list[TissueTable] | None = None,
    tau: float = 0.1,
    threads: int = 1,
) -> TrainingSet:
    """Normalized (T1, T2) inputs with one uniform-conductor target per table."""
    if not specs:
        raise PhantomSpecError(
            "A training set needs at least one phantom spec",
            ErrorContext(operation="phantom_dataset"),
        )
    tables = tables or [conductor.shipped_table("A")]
    dims = specs[0].dims
    for spec in specs[1:]:
        if spec.dims != dims:
            raise DimensionMismatchError(dims, spec.dims, ErrorContext(operation="phantom_dataset"))

    perf = PerformanceLogger(phantom_logger, "phantom_dataset")

    def build(spec: PhantomSpec) -> TrainingSample:
        volumes = generate_phantom(spec, tables[0])
        targets = [
            normalize_conductor(assign_uniform(volumes.labels, table), table.norm_params(tau))
            for table in tables
        ]
        return TrainingSample(
            inputs=[normalize_mri(volumes.t1), normalize_mri(volumes.t2)],
            targets=targets,
            labels=volumes.labels,
        )

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        samples = list(pool.map(build, specs))
    perf.finish(additional_data={"samples": len(samples), "tables": [t.tag for t in tables]})
    return TrainingSet(samples=samples, tables=list(tables), tau=tau)


def parse_phantom_spec(text: str, source: str = "<text>") -> PhantomSpec:
    return phantom_spec_from_values(parse_key_values(text, source), source)


def _check_keys(values: dict[str, str], source: str) -> None:
    unknown = []
    for key in values:
        parts = key.split(".")
        if parts[0] == "shell" and len(parts) == 3:
            if parts[2] not in _SHELL_KEYS:
                unknown.append(key)
        elif key not in _SPEC_KEYS:
            unknown.append(key)
    if unknown:
        raise ConfigurationError(
            f"{source}: unknown phantom keys {sorted(unknown)}",
            ErrorContext(operation="parse_phantom_spec", path=source),
        )


def phantom_spec_from_values(values: dict[str, str], source: str = "<text>") -> PhantomSpec:
    _check_keys(values, source)
    shells = []
    for n, group in enumerate(grouped(values, "shell")):
        try:
            shells.append(
                {
                    "tissue_id": integers(group["tissue"], 1, f"shell.{n}.tissue")[0],
                    "semi_axes_mm": floats(group["semi_axes"], 3, f"shell.{n}.semi_axes"),
                    "center_mm": floats(group["center"], 3, f"shell.{n}.center"),
                    "t1_mean": floats(group["t1"], 1, f"shell.{n}.t1")[0],
                    "t2_mean": floats(group["t2"], 1, f"shell.{n}.t2")[0],
                    "t1_noise": floats(group.get("t1_noise", "0"), 1, f"shell.{n}.t1_noise")[0],
                    "t2_noise": floats(group.get("t2_noise", "0"), 1, f"shell.{n}.t2_noise")[0],
                }
            )
        except KeyError as error:
            raise PhantomSpecError(
                f"{source}: shell.{n} is missing '{error.args[0]}'",
                ErrorContext(operation="parse_phantom_spec", path=source),
            ) from error
    data = {
        "dims": integers(values.get("dims", "64 64 64"), 3, "dims"),
        "voxel_size": floats(values.get("voxel_mm", "1.0"), 1, "voxel_mm")[0],
        "seed": integers(values.get("seed", "0"), 1, "seed")[0],
        "air_t1": floats(values.get("air.t1", "0"), 1, "air.t1")[0],
        "air_t2": floats(values.get("air.t2", "0"), 1, "air.t2")[0],
        "air_noise": floats(values.get("air.noise", "0"), 1, "air.noise")[0],
        "shells": shells,
    }
    return parse_config(PhantomSpec, data, operation="parse_phantom_spec")


def read_phantom_spec(path: str | Path) -> PhantomSpec:
    return phantom_spec_from_values(read_key_values(path), source=str(path))


def format_phantom_spec(spec: PhantomSpec) -> str:
    items: list[tuple[str, object]] = [
        ("dims", spec.dims),
        ("voxel_mm", spec.voxel_size),
        ("seed", spec.seed),
        ("air.t1", spec.air_t1),
        ("air.t2", spec.air_t2),
        ("air.noise", spec.air_noise),
    ]
    for n, shell in enumerate(spec.shells):
        items += [
            (f"shell.{n}.tissue", shell.tissue_id),
            (f"shell.{n}.semi_axes", shell.semi_axes_mm),
            (f"shell.{n}.center", shell.center_mm),
            (f"shell.{n}.t1", shell.t1_mean),
            (f"shell.{n}.t2", shell.t2_mean),
            (f"shell.{n}.t1_noise", shell.t1_noise),
            (f"shell.{n}.t2_noise", shell.t2_noise),
        ]
    return format_key_values(items)


def write_phantom_spec(spec: PhantomSpec, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_phantom_spec(spec), encoding="ascii")
    return path
