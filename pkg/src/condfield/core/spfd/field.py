"""Electric field assembly and solver bookkeeping."""

from pathlib import Path

import numpy as np

from condfield.core.grid import ScalarGrid, VectorGrid, require_same_dims
from condfield.core.spfd.system import MM, Array, SpfdSystem
from condfield.models.types import SolveStats


def _voxel_gradient(psi: Array, axis: int, h: float) -> Array:
    """Potential difference along ``axis`` averaged over a voxel's four parallel edges."""
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis], hi[axis] = slice(None, -1), slice(1, None)
    diff = (psi[tuple(hi)] - psi[tuple(lo)]) / h
    for other in range(3):
        if other != axis:
            a = [slice(None)] * 3
            b = [slice(None)] * 3
            a[other], b[other] = slice(None, -1), slice(1, None)
            diff = 0.5 * (diff[tuple(a)] + diff[tuple(b)])
    return diff


def electric_field(
    psi: ScalarGrid, dadt: VectorGrid, cond: ScalarGrid
) -> tuple[VectorGrid, ScalarGrid]:
    """E = -grad(psi) - dA/dt at voxel centers and its magnitude [V/m]; zero in air."""
    require_same_dims(cond.dims, dadt.dims, "electric_field")
    require_same_dims(tuple(n + 1 for n in cond.dims), psi.dims, "electric_field")
    h = cond.voxel_size * MM
    gradient = np.stack([_voxel_gradient(psi.data, axis, h) for axis in range(3)], axis=-1)
    field = -gradient - dadt.data
    field[cond.data <= 0.0] = 0.0
    e = VectorGrid(field, cond.voxel_size)
    return e, e.magnitude()


def node_current_imbalance(system: SpfdSystem, psi: ScalarGrid | Array) -> Array:
    """Net current [A] leaving each node: source minus operator times potential."""
    values = psi.data if isinstance(psi, ScalarGrid) else np.asarray(psi, dtype=np.float64)
    require_same_dims(system.node_dims, values.shape, "node_current_imbalance")
    return system.residual(values)


def format_solve_report(stats: SolveStats, tolerance: float | None = None) -> str:
    lines = [
        f"converged = {'yes' if stats.converged else 'no'}",
        f"cycles = {stats.cycles}",
        f"levels = {stats.levels}",
        f"final_relative_residual = {stats.final_relative_residual:.6e}",
    ]
    if tolerance is not None:
        lines.append(f"tolerance = {tolerance:.3e}")
    lines.append("# cycle relative_residual")
    lines += [f"{n} {value:.6e}" for n, value in enumerate(stats.residual_history, start=1)]
    return "\n".join(lines) + "\n"


def write_solve_report(stats: SolveStats, path: str | Path, tolerance: float | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_solve_report(stats, tolerance), encoding="ascii")
    return path
