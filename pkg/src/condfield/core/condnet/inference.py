"""Volume inference: three slicing directions, averaged and denormalized."""

from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Protocol

import numpy as np

from condfield.core.condnet.layers import Tensor
from condfield.core.conductor import TissueTable, average_directions, denormalize
from condfield.core.grid import (
    RegionMask,
    ScalarGrid,
    require_same_dims,
    stack_slices,
    volume_planes,
)
from condfield.exceptions.custom_errors import (
    NetworkConfigError,
    NetworkShapeError,
    ValidationError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import Axis
from condfield.services import PerformanceLogger, condnet_logger


class SlicePredictor(Protocol):
    """Anything mapping ``(B, U, p, q)`` input slices to ``(B, V, p, q)`` outputs in [0, 1]."""

    def predict(self, slices: Tensor) -> Tensor: ...


def predict_direction(
    net: SlicePredictor,
    inputs: Sequence[ScalarGrid],
    axis: Axis | str,
    batch_size: int = 8,
    threads: int = 1,
) -> list[ScalarGrid]:
    """Normalized conductor volumes, one per decoder, assembled plane by plane."""
    axis = Axis(axis)
    planes = np.stack([volume_planes(g, axis) for g in inputs], axis=1)
    chunks = [planes[s : s + batch_size] for s in range(0, len(planes), batch_size)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outputs = list(pool.map(net.predict, chunks))
    predicted = np.concatenate(outputs, axis=0)
    expected = (planes.shape[0], planes.shape[2], planes.shape[3])
    if predicted.ndim != 4 or (predicted.shape[0], *predicted.shape[2:]) != expected:
        raise NetworkShapeError(
            f"{axis.value} output",
            f"({planes.shape[0]}, V, {planes.shape[2]}, {planes.shape[3]})",
            predicted.shape,
            ErrorContext(operation="infer_volume"),
        )
    voxel_size = inputs[0].voxel_size
    return [stack_slices(predicted[:, v], axis, voxel_size) for v in range(predicted.shape[1])]


def infer_volume(
    nets: Mapping[Axis, SlicePredictor] | Mapping[str, SlicePredictor],
    inputs: Sequence[ScalarGrid],
    tables: Sequence[TissueTable],
    tau: float = 0.1,
    mask: RegionMask | None = None,
    batch_size: int = 8,
    threads: int = 1,
) -> list[ScalarGrid]:
    """Conductivity volumes [S/m], one per tissue table.

    With a ``mask`` every voxel outside it is set to exactly zero.
    """
    context = ErrorContext(operation="infer_volume", component="condnet")
    by_axis = {Axis(k): v for k, v in nets.items()}
    missing = [a.value for a in (Axis.AXIAL, Axis.SAGITTAL, Axis.CORONAL) if a not in by_axis]
    if missing:
        raise ValidationError(f"Missing network(s) for {', '.join(missing)}", context=context)
    if not inputs:
        raise ValidationError("At least one input volume is required", context=context)
    for grid in inputs[1:]:
        require_same_dims(inputs[0].dims, grid.dims, "infer_volume")
    if mask is not None:
        require_same_dims(inputs[0].dims, mask.dims, "infer_volume")

    perf = PerformanceLogger(condnet_logger, "infer_volume")
    directions = {
        axis: predict_direction(net, inputs, axis, batch_size, threads)
        for axis, net in by_axis.items()
    }
    counts = {len(v) for v in directions.values()}
    if counts != {len(tables)}:
        raise NetworkConfigError(
            f"Networks emit {sorted(counts)} conductor(s), {len(tables)} table(s) given", context
        )

    conductors = []
    for v, table in enumerate(tables):
        averaged = average_directions(
            directions[Axis.AXIAL][v], directions[Axis.SAGITTAL][v], directions[Axis.CORONAL][v]
        )
        cond = denormalize(averaged, table.norm_params(tau))
        if mask is not None:
            cond = cond.like(np.where(mask.data, cond.data, 0.0))
        conductors.append(cond)
    perf.finish(additional_data={"conductors": len(conductors), "dims": list(inputs[0].dims)})
    return conductors
