"""Node-based finite-difference system for the induced scalar potential.

Potentials live on voxel corners, so a grid of ``(nx, ny, nz)`` voxels has
``(nx + 1, ny + 1, nz + 1)`` nodes. Edge ``gx[i, j, k]`` joins node
``(i, j, k)`` to ``(i + 1, j, k)``; its conductance is ``h`` times the mean
conductivity of the four voxels sharing the edge, voxels outside the grid
counting as air. Conductances are in siemens, sources in amperes.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import numpy.typing as npt

from condfield.core.grid import ScalarGrid, VectorGrid, require_same_dims
from condfield.exceptions.custom_errors import NegativeConductivityError, ZeroDiagonalError
from condfield.exceptions.types import ErrorContext
from condfield.services import PerformanceLogger, spfd_logger

MM = 1e-3

Array = npt.NDArray[np.float64]


def _edge_mean(values: Array, axis: int) -> Array:
    """Mean of the four voxel values around every edge parallel to ``axis``."""
    pad = [(1, 1)] * 3
    pad[axis] = (0, 0)
    padded = np.pad(values, pad)
    a, b = [ax for ax in range(3) if ax != axis]
    lo_a = [slice(None)] * 3
    hi_a = [slice(None)] * 3
    lo_a[a], hi_a[a] = slice(None, -1), slice(1, None)
    total = padded[tuple(lo_a)] + padded[tuple(hi_a)]
    lo_b = [slice(None)] * 3
    hi_b = [slice(None)] * 3
    lo_b[b], hi_b[b] = slice(None, -1), slice(1, None)
    return 0.25 * (total[tuple(lo_b)] + total[tuple(hi_b)])


def node_operator_parts(
    gx: Array, gy: Array, gz: Array
) -> tuple[Array, tuple[tuple[Array, int], ...]]:
    """Diagonal and the per-axis conductances of the node stencil."""
    dims = (gx.shape[0] + 1, gy.shape[1] + 1, gz.shape[2] + 1)
    diagonal = np.zeros(dims)
    diagonal[:-1, :, :] += gx
    diagonal[1:, :, :] += gx
    diagonal[:, :-1, :] += gy
    diagonal[:, 1:, :] += gy
    diagonal[:, :, :-1] += gz
    diagonal[:, :, 1:] += gz
    return diagonal, ((gx, 0), (gy, 1), (gz, 2))


def neighbor_sum(edges: tuple[tuple[Array, int], ...], psi: Array) -> Array:
    """Sum over neighbors of conductance times neighbor potential."""
    out = np.zeros_like(psi)
    for g, axis in edges:
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis], hi[axis] = slice(None, -1), slice(1, None)
        lo_t, hi_t = tuple(lo), tuple(hi)
        out[lo_t] += g * psi[hi_t]
        out[hi_t] += g * psi[lo_t]
    return out


@dataclass(frozen=True)
class SpfdSystem:
    """Conductances, source and active-node mask of one grid level."""

    gx: Array
    gy: Array
    gz: Array
    b: Array
    active: npt.NDArray[np.bool_]
    voxel_size: float = 1.0

    def __post_init__(self) -> None:
        dims = self.b.shape
        expected = {
            "gx": (dims[0] - 1, dims[1], dims[2]),
            "gy": (dims[0], dims[1] - 1, dims[2]),
            "gz": (dims[0], dims[1], dims[2] - 1),
        }
        for name, shape in expected.items():
            require_same_dims(shape, getattr(self, name).shape, f"SpfdSystem.{name}")
        require_same_dims(dims, self.active.shape, "SpfdSystem.active")
        lowest = min(float(g.min()) if g.size else 0.0 for g in (self.gx, self.gy, self.gz))
        if lowest < 0:
            raise NegativeConductivityError(lowest, ErrorContext(operation="assemble"))
        starved = int(np.count_nonzero(self.active & (self.diagonal <= 0.0)))
        if starved:
            raise ZeroDiagonalError(starved, ErrorContext(operation="assemble"))
        for array in (self.gx, self.gy, self.gz, self.b, self.active):
            array.flags.writeable = False

    @property
    def node_dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.b.shape)  # type: ignore[return-value]

    @cached_property
    def _parts(self) -> tuple[Array, tuple[tuple[Array, int], ...]]:
        return node_operator_parts(self.gx, self.gy, self.gz)

    @property
    def diagonal(self) -> Array:
        return self._parts[0]

    @property
    def edges(self) -> tuple[tuple[Array, int], ...]:
        return self._parts[1]

    def apply(self, psi: Array) -> Array:
        """Operator times ``psi``; inactive nodes act as identity rows."""
        out = self.diagonal * psi - neighbor_sum(self.edges, psi)
        return np.where(self.active, out, psi)

    def residual(self, psi: Array) -> Array:
        return np.where(self.active, self.b - self.apply(psi), 0.0)

    def with_source(self, b: Array) -> "SpfdSystem":
        """Same operator, different right-hand side."""
        b = np.where(self.active, np.asarray(b, dtype=np.float64), 0.0)
        return replace(self, b=b)

    @classmethod
    def from_conductances(
        cls, gx: Array, gy: Array, gz: Array, b: Array, voxel_size: float = 1.0
    ) -> "SpfdSystem":
        """System whose active nodes are those with any conducting edge."""
        diagonal, _ = node_operator_parts(gx, gy, gz)
        active = diagonal > 0.0
        return cls(
            np.array(gx, dtype=np.float64),
            np.array(gy, dtype=np.float64),
            np.array(gz, dtype=np.float64),
            np.where(active, np.asarray(b, dtype=np.float64), 0.0),
            active,
            voxel_size,
        )


def conducting_nodes(cond: Array) -> npt.NDArray[np.bool_]:
    """Nodes that are a corner of at least one conducting voxel."""
    voxel = np.pad(cond > 0.0, 1)
    out = np.zeros(tuple(n + 1 for n in cond.shape), dtype=bool)
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                out |= voxel[
                    dx : dx + out.shape[0], dy : dy + out.shape[1], dz : dz + out.shape[2]
                ]
    return out


def assemble(cond: ScalarGrid, dadt: VectorGrid) -> SpfdSystem:
    """Edge conductances and the source of -div(sigma dA/dt) on the node grid."""
    require_same_dims(cond.dims, dadt.dims, "assemble")
    sigma = cond.data
    lowest = float(sigma.min())
    if lowest < 0:
        raise NegativeConductivityError(lowest, ErrorContext(operation="assemble"))

    perf = PerformanceLogger(spfd_logger, "assemble")
    h = cond.voxel_size * MM
    conductances = [h * _edge_mean(sigma, axis) for axis in range(3)]
    # edge currents driven by sigma dA/dt
    drive = [h * h * _edge_mean(sigma * dadt.data[..., axis], axis) for axis in range(3)]

    node_dims = tuple(n + 1 for n in cond.dims)
    b = np.zeros(node_dims)
    for axis, current in enumerate(drive):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis], hi[axis] = slice(None, -1), slice(1, None)
        b[tuple(lo)] += current
        b[tuple(hi)] -= current

    active = conducting_nodes(sigma)
    system = SpfdSystem(
        conductances[0],
        conductances[1],
        conductances[2],
        np.where(active, b, 0.0),
        active,
        cond.voxel_size,
    )
    perf.finish(
        additional_data={
            "nodes": int(np.prod(node_dims)),
            "active_nodes": int(np.count_nonzero(active)),
            "source_norm": float(np.linalg.norm(system.b)),
        }
    )
    return system
