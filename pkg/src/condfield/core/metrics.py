"""Field comparison: global error, spherical ROIs and region reports."""

import csv
import io
from collections.abc import Iterable, Sequence

import numpy as np

from condfield.core import conductor
from condfield.core.grid import (
    LabelGrid,
    RegionMask,
    ScalarGrid,
    VectorGrid,
    require_same_dims,
    voxel_centers_mm,
)
from condfield.exceptions.custom_errors import (
    EmptyRegionError,
    UndefinedMetricError,
    ValidationError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import GlobalErrorResult
from condfield.services import metrics_logger

# Lattice points exactly on the sphere surface count as inside.
_SURFACE_TOL = 1e-9

DEFAULT_BRAIN_IDS = frozenset({conductor.GM, conductor.WM, conductor.CEREBELLUM, conductor.CSF})

Field = ScalarGrid | VectorGrid


def _magnitude(field: Field) -> ScalarGrid:
    return field.magnitude() if isinstance(field, VectorGrid) else field


def sphere_roi(
    center_mm: Sequence[float],
    radius_mm: float,
    dims: tuple[int, int, int],
    voxel_size: float = 1.0,
    name: str = "roi",
) -> RegionMask:
    """Voxels whose centers lie within ``radius_mm`` of ``center_mm``."""
    if radius_mm < 0 or not np.isfinite(radius_mm):
        raise ValidationError(
            f"ROI radius must be non-negative, got {radius_mm}",
            context=ErrorContext(operation="sphere_roi"),
        )
    x, y, z = voxel_centers_mm(dims, voxel_size)
    cx, cy, cz = (float(c) for c in center_mm)
    dist2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
    limit = radius_mm * radius_mm + _SURFACE_TOL * max(1.0, radius_mm * radius_mm)
    mask = RegionMask(np.broadcast_to(dist2 <= limit, dims), name, voxel_size)
    if mask.count == 0:
        raise EmptyRegionError(name, ErrorContext(operation="sphere_roi", radius_mm=radius_mm))
    return mask


def head_regions(labels: LabelGrid, brain_ids: Iterable[int] | None = None) -> list[RegionMask]:
    """Brain, non-brain and whole-head masks from tissue labels."""
    ids = set(DEFAULT_BRAIN_IDS if brain_ids is None else brain_ids)
    head = labels.data != 0
    brain = conductor.tissue_region(labels, ids, "brain").data & head
    return [
        RegionMask(brain, "brain", labels.voxel_size),
        RegionMask(head & ~brain, "non-brain", labels.voxel_size),
        RegionMask(head, "head", labels.voxel_size),
    ]


def global_error(reference: Field, estimate: Field, region: RegionMask) -> GlobalErrorResult:
    """Mean absolute difference over ``region`` relative to the largest value of either field.

    The normalizer is the maximum of both magnitudes inside the region, so the
    result is symmetric in its two field arguments and invariant to a common
    positive scale.
    """
    e, e_hat = _magnitude(reference), _magnitude(estimate)
    require_same_dims(e.dims, e_hat.dims, "global_error")
    require_same_dims(e.dims, region.dims, "global_error")
    if region.count == 0:
        raise EmptyRegionError(region.name, ErrorContext(operation="global_error"))

    a = e.data[region.data]
    b = e_hat.data[region.data]
    normalizer = max(float(a.max()), float(b.max()))
    if normalizer <= 0.0:
        raise UndefinedMetricError(
            f"Both fields vanish in region '{region.name}'",
            ErrorContext(operation="global_error", region=region.name),
        )
    contributions = np.abs(a - b) / normalizer * 100.0
    mean = float(contributions.mean())
    return GlobalErrorResult(
        region=region.name,
        ge_percent=float(np.abs(a - b).mean() / normalizer * 100.0),
        mean_percent=mean,
        std_percent=float(contributions.std()),
        normalizer=normalizer,
        voxels=int(a.size),
    )


def region_report(
    reference: Field, estimate: Field, regions: Sequence[RegionMask]
) -> list[GlobalErrorResult]:
    """One independently normalized row per region."""
    rows = [global_error(reference, estimate, region) for region in regions]
    for row in rows:
        metrics_logger.info(
            type="region_error",
            region=row.region,
            ge_percent=row.ge_percent,
            std_percent=row.std_percent,
            voxels=row.voxels,
            msg=f"GE in {row.region}: {row.ge_percent:.2f}%",
        )
    return rows


def format_cell(row: GlobalErrorResult) -> str:
    return f"{row.mean_percent:.2f}±{row.std_percent:.2f}"


def format_report(rows: Sequence[GlobalErrorResult]) -> str:
    """Aligned text table, percentages with two decimals."""
    header = ("region", "GE [%]", "voxels", "normalizer [V/m]")
    body = [(r.region, format_cell(r), str(r.voxels), f"{r.normalizer:.6g}") for r in rows]
    widths = [max(len(line[c]) for line in [header, *body]) for c in range(len(header))]
    lines = [
        "  ".join(cell.ljust(w) for cell, w in zip(line, widths, strict=True)).rstrip()
        for line in [header, *body]
    ]
    return "\n".join(lines) + "\n"


def report_csv(rows: Sequence[GlobalErrorResult]) -> str:
    """Machine-readable report: region, GE, mean, std (percent)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["region", "ge_percent", "mean_percent", "std_percent", "normalizer", "voxels"])
    for row in rows:
        writer.writerow(
            [
                row.region,
                repr(row.ge_percent),
                repr(row.mean_percent),
                repr(row.std_percent),
                repr(row.normalizer),
                row.voxels,
            ]
        )
    return buffer.getvalue()
