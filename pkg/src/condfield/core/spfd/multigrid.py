"""Red-black SOR smoothing and geometric multigrid for the potential system.

Coarse levels halve the voxel count per axis while every axis stays even and
keeps at least ``coarsest_cells`` voxels. Transfers are trilinear
prolongation and its transpose. A coarse edge conductance is the
full-weighting sum, across the edge's transverse neighborhood, of the series
conductances of the two fine edges it spans.
"""

from enum import Enum
from itertools import pairwise

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as ssl

from condfield.core.grid import ScalarGrid
from condfield.core.spfd.system import Array, SpfdSystem, neighbor_sum
from condfield.exceptions.custom_errors import SolverDivergenceError, ValidationError
from condfield.exceptions.types import ErrorContext
from condfield.models.types import SolveConfig, SolveStats
from condfield.services import PerformanceLogger, log_solver_cycle, spfd_logger

# Consecutive residual increases that count as divergence.
DIVERGENCE_CYCLES = 3


class SweepOrder(str, Enum):
    RED_BLACK = "red-black"
    BLACK_RED = "black-red"


def _parity(dims: tuple[int, ...]) -> npt.NDArray[np.bool_]:
    i, j, k = np.indices(dims, sparse=True)
    return (i + j + k) % 2 == 0


def _relax_color(
    system: SpfdSystem, psi: Array, rhs: Array, omega: float, color: npt.NDArray[np.bool_]
) -> None:
    update = system.active & color
    target = (rhs + neighbor_sum(system.edges, psi))[update] / system.diagonal[update]
    psi[update] = (1.0 - omega) * psi[update] + omega * target


def relax(
    system: SpfdSystem,
    psi: Array,
    rhs: Array,
    omega: float,
    order: SweepOrder = SweepOrder.RED_BLACK,
    red: npt.NDArray[np.bool_] | None = None,
) -> None:
    """One in-place red-black sweep for ``S psi = rhs``."""
    red = _parity(system.node_dims) if red is None else red
    first, second = (red, ~red) if order == SweepOrder.RED_BLACK else (~red, red)
    _relax_color(system, psi, rhs, omega, first)
    _relax_color(system, psi, rhs, omega, second)
    psi[~system.active] = 0.0


def sor_sweep(
    system: SpfdSystem,
    psi: Array,
    omega: float = 1.5,
    order: SweepOrder | str = SweepOrder.RED_BLACK,
) -> Array:
    """One red-black SOR sweep; returns the updated potential.

    With ``omega = 1`` this is red-black Gauss-Seidel.
    """
    if not 0.0 < omega < 2.0:
        raise ValidationError(
            f"Relaxation factor must lie in (0, 2), got {omega}",
            context=ErrorContext(operation="sor_sweep"),
        )
    out = np.array(psi, dtype=np.float64)
    relax(system, out, system.b, omega, SweepOrder(order))
    return out


def relative_residual(system: SpfdSystem, psi: Array) -> float:
    norm_b = float(np.linalg.norm(system.b))
    return float(np.linalg.norm(system.residual(psi))) / norm_b if norm_b > 0 else 0.0


# Grid transfers
def _prolong_axis(coarse: Array, axis: int) -> Array:
    c = np.moveaxis(coarse, axis, 0)
    fine = np.empty((2 * (c.shape[0] - 1) + 1, *c.shape[1:]))
    fine[0::2] = c
    fine[1::2] = 0.5 * (c[:-1] + c[1:])
    return np.moveaxis(fine, 0, axis)


def _restrict_axis(fine: Array, axis: int) -> Array:
    f = np.moveaxis(fine, axis, 0)
    coarse = np.array(f[0::2])
    coarse[:-1] += 0.5 * f[1::2]
    coarse[1:] += 0.5 * f[1::2]
    return np.moveaxis(coarse, 0, axis)


def prolong(coarse: Array) -> Array:
    """Trilinear interpolation from coarse to fine nodes."""
    out = coarse
    for axis in range(3):
        out = _prolong_axis(out, axis)
    return out


def restrict(fine: Array) -> Array:
    """Transpose of :func:`prolong`."""
    out = fine
    for axis in range(3):
        out = _restrict_axis(out, axis)
    return out


def _series(g: Array, axis: int) -> Array:
    g = np.moveaxis(g, axis, 0)
    a, b = g[0::2], g[1::2]
    total = a + b
    out = np.divide(a * b, total, out=np.zeros_like(total), where=total > 0.0)
    return np.moveaxis(out, 0, axis)


def coarsen(system: SpfdSystem) -> SpfdSystem:
    """Operator of the next coarser level; the source is not carried over."""
    coarse_g = []
    for g, axis in system.edges:
        c = _series(g, axis)
        for other in range(3):
            if other != axis:
                c = _restrict_axis(c, other)
        coarse_g.append(c)
    dims = tuple((n - 1) // 2 + 1 for n in system.node_dims)
    return SpfdSystem.from_conductances(*coarse_g, np.zeros(dims), 2.0 * system.voxel_size)


def can_coarsen(system: SpfdSystem, coarsest_cells: int) -> bool:
    cells = [n - 1 for n in system.node_dims]
    return all(c % 2 == 0 and c // 2 >= coarsest_cells for c in cells)


def build_hierarchy(system: SpfdSystem, cfg: SolveConfig) -> list[SpfdSystem]:
    levels = [system]
    while can_coarsen(levels[-1], cfg.coarsest_cells):
        levels.append(coarsen(levels[-1]))
    return levels


class Multigrid:
    """Symmetric V-cycle over a level hierarchy."""

    def __init__(self, levels: list[SpfdSystem], cfg: SolveConfig) -> None:
        self.levels = levels
        self.cfg = cfg
        self.red = [_parity(level.node_dims) for level in levels]
        self.cycles = 0

    def v_cycle(self, rhs: Array, level: int = 0) -> Array:
        """Approximate solution of ``S e = rhs`` from a zero initial guess."""
        if level == 0:
            self.cycles += 1
        system, red, cfg = self.levels[level], self.red[level], self.cfg
        e = np.zeros_like(rhs)
        if level == len(self.levels) - 1:
            for _ in range(max(1, cfg.coarsest_sweeps // 2)):
                relax(system, e, rhs, cfg.omega, SweepOrder.RED_BLACK, red)
                relax(system, e, rhs, cfg.omega, SweepOrder.BLACK_RED, red)
            return e

        for _ in range(cfg.pre_sweeps):
            relax(system, e, rhs, cfg.omega, SweepOrder.RED_BLACK, red)
        residual = np.where(system.active, rhs - system.apply(e), 0.0)
        correction = prolong(self.v_cycle(restrict(residual), level + 1))
        e += np.where(system.active, correction, 0.0)
        for _ in range(cfg.post_sweeps):
            relax(system, e, rhs, cfg.omega, SweepOrder.BLACK_RED, red)
        return e


def diverging(history: list[float], cycles: int = DIVERGENCE_CYCLES) -> bool:
    """True when the last ``cycles`` entries each grew over their predecessor."""
    if history and not np.isfinite(history[-1]):
        return True
    if len(history) <= cycles:
        return False
    tail = history[-(cycles + 1) :]
    return all(later > earlier for earlier, later in pairwise(tail))


def conducting_components(system: SpfdSystem) -> npt.NDArray[np.int64]:
    """Component index of every node, joining nodes through conducting edges."""
    dims = system.node_dims
    index = np.arange(int(np.prod(dims))).reshape(dims)
    rows, cols = [], []
    for g, axis in system.edges:
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis], hi[axis] = slice(None, -1), slice(1, None)
        joined = g > 0.0
        rows.append(index[tuple(lo)][joined])
        cols.append(index[tuple(hi)][joined])
    i, j = np.concatenate(rows), np.concatenate(cols)
    graph = sp.coo_matrix((np.ones(i.size), (i, j)), shape=(index.size, index.size))
    _, labels = csgraph.connected_components(graph, directed=False)
    return labels.reshape(dims)


def _gauge(system: SpfdSystem, psi: Array) -> Array:
    """Zero mean over each conducting component, exact zero elsewhere."""
    out = np.where(system.active, psi, 0.0)
    if not np.any(system.active):
        return out
    labels = conducting_components(system)[system.active]
    sums = np.bincount(labels, weights=out[system.active])
    counts = np.bincount(labels)
    out[system.active] -= sums[labels] / counts[labels]
    return out


class ResidualMonitor:
    """Residual history and divergence check shared by both iterations.

    Stationary cycles stop after ``DIVERGENCE_CYCLES`` consecutive increases.
    The preconditioned CG residual is not monotone, so under CG the same run of
    increases only counts once the residual exceeds the starting one.
    """

    def __init__(self, system: SpfdSystem, mg: Multigrid, krylov: bool) -> None:
        self.system = system
        self.mg = mg
        self.krylov = krylov
        self.norm_b = float(np.linalg.norm(system.b))
        self.history: list[float] = []

    def record(self, psi: Array) -> float:
        rel = float(np.linalg.norm(self.system.residual(psi))) / self.norm_b
        self.history.append(rel)
        log_solver_cycle(self.mg.cycles, rel, len(self.mg.levels))
        if diverging(self.history) and (not self.krylov or rel > 1.0 or not np.isfinite(rel)):
            raise SolverDivergenceError(
                self.mg.cycles, list(self.history), ErrorContext(operation="solve")
            )
        return rel


def _solve_stationary(
    system: SpfdSystem, mg: Multigrid, monitor: ResidualMonitor, cfg: SolveConfig
) -> Array:
    psi = np.zeros(system.node_dims)
    while mg.cycles < cfg.max_cycles:
        psi += mg.v_cycle(system.residual(psi))
        if monitor.record(psi) <= cfg.tolerance:
            break
    return psi


def _solve_krylov(
    system: SpfdSystem, mg: Multigrid, monitor: ResidualMonitor, cfg: SolveConfig
) -> Array:
    dims = system.node_dims
    size = int(np.prod(dims))
    operator = ssl.LinearOperator(
        (size, size), matvec=lambda v: system.apply(v.reshape(dims)).ravel(), dtype=np.float64
    )
    preconditioner = ssl.LinearOperator(
        (size, size), matvec=lambda r: mg.v_cycle(r.reshape(dims)).ravel(), dtype=np.float64
    )
    psi = np.zeros(size)
    rel = 1.0
    # restart when the recurrence residual undershoots the true one
    while mg.cycles < cfg.max_cycles and rel > cfg.tolerance:
        start = mg.cycles
        budget = cfg.max_cycles - start
        psi, _ = ssl.cg(
            operator,
            system.b.ravel(),
            x0=psi,
            rtol=cfg.tolerance,
            atol=0.0,
            maxiter=budget,
            M=preconditioner,
            callback=lambda x: monitor.record(x.reshape(dims)),
        )
        rel = float(np.linalg.norm(system.residual(psi.reshape(dims)))) / monitor.norm_b
        if mg.cycles == start:
            break
    return psi.reshape(dims)


def solve(system: SpfdSystem, cfg: SolveConfig | None = None) -> tuple[ScalarGrid, SolveStats]:
    """Potential on the node grid and convergence statistics."""
    cfg = cfg or SolveConfig()
    norm_b = float(np.linalg.norm(system.b))
    if norm_b == 0.0:
        spfd_logger.info(type="solve_trivial", msg="Zero source, potential is zero")
        stats = SolveStats(
            cycles=0, final_relative_residual=0.0, residual_history=[], converged=True, levels=1
        )
        return ScalarGrid(np.zeros(system.node_dims), system.voxel_size), stats

    perf = PerformanceLogger(spfd_logger, "solve")
    levels = build_hierarchy(system, cfg)
    mg = Multigrid(levels, cfg)
    monitor = ResidualMonitor(system, mg, cfg.krylov)
    if cfg.krylov:
        psi = _solve_krylov(system, mg, monitor, cfg)
    else:
        psi = _solve_stationary(system, mg, monitor, cfg)
    psi = _gauge(system, psi)

    final = relative_residual(system, psi)
    stats = SolveStats(
        cycles=mg.cycles,
        final_relative_residual=final,
        residual_history=list(monitor.history),
        converged=final <= cfg.tolerance,
        levels=len(levels),
    )
    perf.finish(
        result="success" if stats.converged else "error",
        additional_data={
            "cycles": stats.cycles,
            "levels": stats.levels,
            "final_relative_residual": final,
            "converged": stats.converged,
        },
    )
    return ScalarGrid(psi, system.voxel_size), stats
