"""Tissue conductivity tables and the volume conductor normalization chain."""

from importlib import resources
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from condfield.config import settings
from condfield.core.grid import LabelGrid, RegionMask, ScalarGrid, require_same_dims
from condfield.exceptions.custom_errors import (
    ConductorRangeError,
    EmptyRegionError,
    InputFileNotFoundError,
    TissueTableError,
    UnknownTissueError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import ConductivityStats, NormParams
from condfield.services import conductor_logger

# Shipped tissue identifiers; both tables use the same ids.
BLOOD = 1
BONE_CANCELLOUS = 2
BONE_CORTICAL = 3
CEREBELLUM = 4
CSF = 5
DURA = 6
FAT = 7
GM = 8
MUCOUS_TISSUE = 9
MUSCLE = 10
SKIN = 11
VITREOUS_HUMOR = 12
WM = 13

# Relative slack when checking values against sigma_max.
_RANGE_RTOL = 1e-9


class TissueEntry(BaseModel):
    """One tissue row."""

    model_config = ConfigDict(frozen=True)

    name: str
    sigma: float = Field(..., gt=0.0)


class TissueTable(BaseModel):
    """Tissue id to conductivity [S/m]; air (id 0) is implicit with sigma 0."""

    model_config = ConfigDict(frozen=True)

    tag: str
    entries: dict[int, TissueEntry]

    @field_validator("entries")
    @classmethod
    def _no_air_entry(cls, value: dict[int, TissueEntry]) -> dict[int, TissueEntry]:
        if not value:
            raise ValueError("table needs at least one tissue")
        if 0 in value:
            raise ValueError("id 0 is reserved for air")
        if any(i < 0 for i in value):
            raise ValueError("tissue ids must be positive")
        return value

    @property
    def sigma_max(self) -> float:
        return max(e.sigma for e in self.entries.values())

    def sigma(self, tissue_id: int) -> float:
        if tissue_id == 0:
            return 0.0
        try:
            return self.entries[tissue_id].sigma
        except KeyError:
            raise UnknownTissueError([tissue_id], self.tag) from None

    def id_of(self, name: str) -> int:
        for tissue_id, entry in self.entries.items():
            if entry.name.lower() == name.lower():
                return tissue_id
        raise TissueTableError(f"Tissue '{name}' not in table '{self.tag}'")

    def lookup(self) -> np.ndarray:
        """Dense id -> sigma array, air at index 0."""
        table = np.zeros(max(self.entries) + 1, dtype=np.float64)
        for tissue_id, entry in self.entries.items():
            table[tissue_id] = entry.sigma
        return table

    def norm_params(self, tau: float | None = None) -> NormParams:
        return NormParams(tau=settings.tau if tau is None else tau, sigma_max=self.sigma_max)


def parse_tissue_table(text: str, tag: str | None = None, source: str = "<text>") -> TissueTable:
    """Parse ``id name sigma`` lines; ``# tag = X`` sets the tag."""
    entries: dict[int, TissueEntry] = {}
    found_tag = tag
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("tag") and "=" in body and found_tag is None:
                found_tag = body.split("=", 1)[1].strip()
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TissueTableError(
                f"{source}:{number}: expected 'id name sigma', got '{line}'",
                ErrorContext(operation="parse_tissue_table", path=source),
            )
        try:
            tissue_id, sigma = int(parts[0]), float(parts[2])
        except ValueError as error:
            raise TissueTableError(
                f"{source}:{number}: bad number in '{line}'",
                ErrorContext(operation="parse_tissue_table", path=source),
            ) from error
        if tissue_id in entries:
            raise TissueTableError(f"{source}:{number}: duplicate tissue id {tissue_id}")
        if tissue_id <= 0 or sigma <= 0:
            raise TissueTableError(f"{source}:{number}: ids and conductivities must be positive")
        entries[tissue_id] = TissueEntry(name=parts[1], sigma=sigma)
    if not entries:
        raise TissueTableError(f"{source}: no tissue rows")
    return TissueTable(tag=found_tag or Path(source).stem, entries=entries)


def format_tissue_table(table: TissueTable) -> str:
    lines = [f"# tag = {table.tag}", "# id name sigma[S/m]"]
    for tissue_id in sorted(table.entries):
        entry = table.entries[tissue_id]
        lines.append(f"{tissue_id} {entry.name} {entry.sigma!r}")
    return "\n".join(lines) + "\n"


def load_tissue_table(path: str | Path) -> TissueTable:
    path = Path(path)
    if not path.is_file():
        raise InputFileNotFoundError(str(path), ErrorContext(operation="load_tissue_table"))
    return parse_tissue_table(path.read_text(encoding="ascii"), source=str(path))


def shipped_table(letter: str) -> TissueTable:
    """Table column ``A`` (Cole-Cole at 10 kHz) or ``B`` (typical values)."""
    letter = letter.strip().upper()
    if letter not in ("A", "B"):
        raise TissueTableError(f"Unknown shipped table '{letter}', expected A or B")
    filename = f"tissue_table_{letter.lower()}.txt"
    override = settings.resolved_table_dir
    if override is not None and (override / filename).is_file():
        return load_tissue_table(override / filename)
    text = resources.files("condfield.data").joinpath(filename).read_text(encoding="ascii")
    return parse_tissue_table(text, source=filename)


def resolve_table(name: str) -> TissueTable:
    """A shipped letter or a path to a table file."""
    if name.strip().upper() in ("A", "B"):
        return shipped_table(name)
    return load_tissue_table(name)


def assign_uniform(labels: LabelGrid, table: TissueTable) -> ScalarGrid:
    """Map every label onto its tabulated conductivity; air stays 0."""
    present = np.unique(labels.data)
    missing = sorted(int(i) for i in present if i != 0 and int(i) not in table.entries)
    if missing:
        raise UnknownTissueError(missing, table.tag, ErrorContext(operation="assign_uniform"))
    lookup = table.lookup()
    cond = lookup[np.minimum(labels.data, len(lookup) - 1)]
    conductor_logger.debug(
        type="uniform_assigned",
        table=table.tag,
        tissues=len(present),
        msg=f"Uniform conductor assigned from table {table.tag}",
    )
    return ScalarGrid(cond, labels.voxel_size)


def normalize_conductor(cond: ScalarGrid, params: NormParams) -> ScalarGrid:
    """Scale conductivities from [0, sigma_max] onto [0, 1 - tau]."""
    lo, hi = float(cond.data.min()), float(cond.data.max())
    if lo < 0:
        raise ConductorRangeError(
            f"Negative conductivity {lo:g} S/m", ErrorContext(operation="normalize_conductor")
        )
    if hi > params.sigma_max * (1.0 + _RANGE_RTOL):
        raise ConductorRangeError(
            f"Conductivity {hi:g} S/m exceeds sigma_max {params.sigma_max:g} S/m",
            ErrorContext(operation="normalize_conductor"),
        )
    return cond.like(cond.data * params.scale)


def average_directions(axial: ScalarGrid, sagittal: ScalarGrid, coronal: ScalarGrid) -> ScalarGrid:
    """Voxelwise mean of the three direction volumes.

    The three values are sorted before summation so the result does not
    depend on argument order, bit for bit.
    """
    require_same_dims(axial.dims, sagittal.dims, "average_directions")
    require_same_dims(axial.dims, coronal.dims, "average_directions")
    ordered = np.sort(np.stack([axial.data, sagittal.data, coronal.data]), axis=0)
    return axial.like((ordered[0] + ordered[1] + ordered[2]) / 3.0)


def denormalize(normalized: ScalarGrid, params: NormParams) -> ScalarGrid:
    """Map a normalized conductor back to S/m."""
    lo = float(normalized.data.min())
    if lo < 0:
        raise ConductorRangeError(
            f"Normalized conductor has negative value {lo:g}", ErrorContext(operation="denormalize")
        )
    return normalized.like(normalized.data * (params.sigma_max / (1.0 - params.tau)))


def roi_conductivity_stats(cond: ScalarGrid, region: RegionMask) -> ConductivityStats:
    """Summary statistics of conductivity inside ``region``.

    Quartiles use the midpoint convention: between two order statistics the
    average of both is taken.
    """
    require_same_dims(cond.dims, region.dims, "roi_conductivity_stats")
    values = cond.data[region.data]
    if values.size == 0:
        raise EmptyRegionError(region.name, ErrorContext(operation="roi_conductivity_stats"))
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0], method="midpoint")
    return ConductivityStats(
        region=region.name,
        count=int(values.size),
        mean=float(values.mean()),
        std=float(values.std()),
        minimum=float(values.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        maximum=float(values.max()),
    )


def tissue_region(labels: LabelGrid, tissue_ids: set[int] | list[int], name: str) -> RegionMask:
    """Voxels carrying any of ``tissue_ids``."""
    ids = np.asarray(sorted(tissue_ids), dtype=np.uint16)
    return RegionMask(np.isin(labels.data, ids), name, labels.voxel_size)
