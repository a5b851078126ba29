"""Tests for the scalar-potential finite-difference solver."""

import numpy as np
import pytest

from condfield.core.coil import uniform_dbdt_field
from condfield.core.grid import ScalarGrid, VectorGrid
from condfield.core.spfd import (
    assemble,
    electric_field,
    format_solve_report,
    node_current_imbalance,
    relative_residual,
    solve,
    sor_sweep,
)
from condfield.core.spfd.multigrid import (
    Multigrid,
    ResidualMonitor,
    build_hierarchy,
    conducting_components,
    diverging,
    prolong,
    restrict,
)
from condfield.exceptions.custom_errors import (
    NegativeConductivityError,
    SolverDivergenceError,
    ValidationError,
)
from condfield.models.types import SolveConfig

TIGHT = SolveConfig(tolerance=1e-10, max_cycles=200)


def _layered(dims: tuple[int, int, int]) -> ScalarGrid:
    """Two conductivities split along x, filling the whole box."""
    sigma = np.full(dims, 0.3)
    sigma[: dims[0] // 2] = 1.2
    return ScalarGrid(sigma)


def _uniform_source(dims: tuple[int, int, int], dbdt=(1e4, 0.0, 0.0)) -> VectorGrid:
    return uniform_dbdt_field(dbdt, [0.5 * n for n in dims], dims)


def _dense(system) -> np.ndarray:
    size = int(np.prod(system.node_dims))
    columns = []
    for j in range(size):
        unit = np.zeros(size)
        unit[j] = 1.0
        columns.append(system.apply(unit.reshape(system.node_dims)).ravel())
    return np.stack(columns, axis=1)


class TestAssembly:
    """Node system built from conductivity and source."""

    def test_node_grid_has_corner_layout(self):
        """A voxel grid of n cells per axis has n + 1 nodes per axis."""
        system = assemble(_layered((3, 4, 5)), _uniform_source((3, 4, 5)))
        assert system.node_dims == (4, 5, 6)

    def test_operator_is_symmetric_with_constant_null_space(self):
        """The fully conducting operator is symmetric and annihilates constants."""
        system = assemble(_layered((3, 3, 3)), _uniform_source((3, 3, 3)))
        matrix = _dense(system)
        assert np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-15)
        assert np.allclose(matrix @ np.ones(matrix.shape[0]), 0.0, atol=1e-15)

    def test_source_sums_to_zero(self):
        """Net injected current vanishes."""
        system = assemble(_layered((4, 4, 4)), _uniform_source((4, 4, 4)))
        assert abs(system.b.sum()) < 1e-12 * np.abs(system.b).sum()

    def test_air_nodes_inactive(self, make_sphere):
        """Nodes touching no conducting voxel are excluded."""
        cond = make_sphere((8, 8, 8), 2.5)
        system = assemble(cond, _uniform_source((8, 8, 8)))
        assert not system.active[0, 0, 0]
        assert system.active[4, 4, 4]
        assert np.all(system.b[~system.active] == 0.0)

    def test_negative_conductivity(self):
        """Negative conductivity is rejected."""
        cond = ScalarGrid(np.full((2, 2, 2), -0.1))
        with pytest.raises(NegativeConductivityError):
            assemble(cond, _uniform_source((2, 2, 2)))


class TestSolve:
    """Potential solutions and their bookkeeping."""

    def test_matches_dense_least_squares(self, rng):
        """A tiny random conductor agrees with the minimum-norm dense solution."""
        cond = ScalarGrid(rng.uniform(0.1, 2.0, size=(3, 3, 3)))
        dadt = VectorGrid(rng.normal(size=(3, 3, 3, 3)))
        system = assemble(cond, dadt)
        psi, stats = solve(system, TIGHT)
        reference, *_ = np.linalg.lstsq(_dense(system), system.b.ravel(), rcond=None)
        assert stats.converged
        scale = np.abs(reference).max()
        assert np.abs(psi.data.ravel() - reference).max() <= 1e-6 * scale

    def test_manufactured_potential(self):
        """A source built from a smooth potential gives that potential back."""
        dims = (16, 16, 16)
        system = assemble(ScalarGrid(np.ones(dims)), VectorGrid(np.zeros((*dims, 3))))
        i, j, k = np.indices(system.node_dims, dtype=np.float64)
        exact = np.cos(np.pi * i / 16) * np.cos(2 * np.pi * j / 16) + 0.5 * np.sin(np.pi * k / 16)
        exact -= exact.mean()
        psi, stats = solve(system.with_source(system.apply(exact)), TIGHT)
        assert stats.converged
        assert stats.levels == 3
        assert np.abs(psi.data - exact).max() <= 1e-6 * np.abs(exact).max()

    def test_zero_mean_gauge(self):
        """The potential has zero mean over conducting nodes."""
        dims = (8, 8, 8)
        system = assemble(_layered(dims), _uniform_source(dims))
        psi, _ = solve(system)
        assert abs(psi.data[system.active].mean()) < 1e-12 * np.abs(psi.data).max()

    def test_mirror_symmetry(self):
        """A conductor and source mirrored in x give a potential mirrored in x."""
        dims = (16, 8, 8)
        sigma = np.full(dims, 0.3)
        sigma[4:12] = 1.2
        sigma[:, :2] = 0.7
        x, y, z = np.meshgrid(*[np.arange(n) + 0.5 - 0.5 * n for n in dims], indexing="ij")
        dadt = np.zeros((*dims, 3))
        dadt[..., 0] = x * (1.0 + y**2 / 50.0)
        dadt[..., 1] = 0.1 * x**2 + z
        system = assemble(ScalarGrid(sigma), VectorGrid(dadt))
        assert np.allclose(system.b[::-1], system.b, atol=1e-12 * np.abs(system.b).max())
        psi, stats = solve(system, TIGHT)
        assert stats.converged
        assert np.abs(psi.data[::-1] - psi.data).max() <= 1e-6 * np.abs(psi.data).max()

    def test_disconnected_islands_are_gauged_separately(self):
        """Each conducting island has zero mean potential and solves as if alone."""
        dims = (16, 8, 8)
        both = np.zeros(dims)
        both[1:7, 1:7, 1:7] = 1.0
        both[8:15, 1:7, 1:7] = 0.5
        alone = np.where(np.arange(16)[:, None, None] < 7, both, 0.0)
        dadt = _uniform_source(dims, (0.0, 3e3, 1e4))
        cfg = SolveConfig(tolerance=1e-9, max_cycles=200, coarsest_cells=2)

        system = assemble(ScalarGrid(both), dadt)
        labels = conducting_components(system)
        islands = np.unique(labels[system.active])
        assert islands.size == 2
        # nodes 7 and 8 along x are both active but only joined across air
        assert labels[7, 3, 3] != labels[8, 3, 3]

        psi, stats = solve(system, cfg)
        assert stats.converged
        scale = np.abs(psi.data).max()
        for island in islands:
            nodes = system.active & (labels == island)
            assert abs(psi.data[nodes].mean()) <= 1e-12 * scale

        single, _ = solve(assemble(ScalarGrid(alone), dadt), cfg)
        first = system.active & (labels == labels[3, 3, 3])
        assert np.abs(psi.data[first] - single.data[first]).max() <= 1e-6 * scale

    def test_current_conservation(self):
        """Net current at every node vanishes to the solver tolerance."""
        dims = (16, 16, 16)
        system = assemble(_layered(dims), _uniform_source(dims))
        psi, stats = solve(system, SolveConfig(tolerance=1e-8))
        imbalance = node_current_imbalance(system, psi)
        assert stats.converged
        assert np.abs(imbalance).max() <= 1e-6 * np.linalg.norm(system.b)

    def test_zero_source(self):
        """No source means zero potential without iterating."""
        dims = (4, 4, 4)
        system = assemble(ScalarGrid(np.ones(dims)), VectorGrid(np.zeros((*dims, 3))))
        psi, stats = solve(system)
        assert np.all(psi.data == 0.0)
        assert stats.converged
        assert stats.cycles == 0

    def test_conductivity_scale_invariance(self):
        """Scaling every conductivity by ten leaves E unchanged."""
        dims = (8, 8, 8)
        cond = _layered(dims)
        dadt = _uniform_source(dims)
        scaled = cond.like(10.0 * cond.data)
        psi, _ = solve(assemble(cond, dadt), TIGHT)
        psi10, _ = solve(assemble(scaled, dadt), TIGHT)
        e, _ = electric_field(psi, dadt, cond)
        e10, _ = electric_field(psi10, dadt, scaled)
        assert np.allclose(e10.data, e.data, rtol=1e-6, atol=1e-9 * np.abs(e.data).max())

    def test_stationary_cycles_reduce_residual(self):
        """Plain V-cycles without the Krylov wrapper make progress."""
        dims = (16, 16, 16)
        system = assemble(_layered(dims), _uniform_source(dims))
        _, stats = solve(system, SolveConfig(krylov=False, omega=1.0, max_cycles=10))
        assert stats.residual_history[-1] < 0.1 * stats.residual_history[0]

    def test_hierarchy_depth(self):
        """Levels halve while axes stay even and above the coarsest size."""
        dims = (32, 32, 16)
        system = assemble(_layered(dims), _uniform_source(dims))
        levels = build_hierarchy(system, SolveConfig(coarsest_cells=4))
        assert [lv.node_dims for lv in levels] == [(33, 33, 17), (17, 17, 9), (9, 9, 5)]

    def test_report_text(self):
        """The solve report states convergence and the residual history."""
        dims = (8, 8, 8)
        _, stats = solve(assemble(_layered(dims), _uniform_source(dims)))
        text = format_solve_report(stats, 1e-6)
        assert text.startswith("converged = yes\n")
        assert "# cycle relative_residual" in text
        assert len(text.splitlines()) == 6 + len(stats.residual_history)


class TestElectricField:
    """E = -grad(psi) - dA/dt at voxel centers."""

    def test_zero_in_air(self, make_sphere):
        """Non-conducting voxels carry exactly zero field."""
        dims = (8, 8, 8)
        cond = make_sphere(dims, 3.0)
        dadt = _uniform_source(dims, (0.0, 3e3, 1e4))
        psi, _ = solve(assemble(cond, dadt))
        e, magnitude = electric_field(psi, dadt, cond)
        air = cond.data == 0.0
        assert np.all(e.data[air] == 0.0)
        assert np.all(magnitude.data[air] == 0.0)
        assert np.all(magnitude.data[~air] > 0.0)

    def test_constant_potential_leaves_minus_dadt(self):
        """Without a potential gradient E is the negated source."""
        dims = (4, 4, 4)
        cond = ScalarGrid(np.ones(dims))
        dadt = _uniform_source(dims, (0.0, 0.0, 5e3))
        psi = ScalarGrid(np.full(tuple(n + 1 for n in dims), 2.0))
        e, _ = electric_field(psi, dadt, cond)
        assert np.array_equal(e.data, -dadt.data)

    def test_linear_potential_gives_uniform_gradient(self):
        """psi = x (in meters) yields E_x = -1 V/m."""
        dims = (4, 4, 4)
        cond = ScalarGrid(np.ones(dims), voxel_size=2.0)
        i = np.indices(tuple(n + 1 for n in dims))[0].astype(np.float64)
        psi = ScalarGrid(i * 2e-3, voxel_size=2.0)
        e, _ = electric_field(psi, VectorGrid(np.zeros((*dims, 3)), 2.0), cond)
        assert np.allclose(e.data[..., 0], -1.0)
        assert np.allclose(e.data[..., 1:], 0.0)


class TestSmoothing:
    """Red-black relaxation and grid transfers."""

    def test_sweep_returns_new_array(self):
        """The input potential is not modified."""
        dims = (4, 4, 4)
        system = assemble(_layered(dims), _uniform_source(dims))
        psi = np.zeros(system.node_dims)
        out = sor_sweep(system, psi, omega=1.0)
        assert np.all(psi == 0.0)
        assert np.any(out != 0.0)

    def test_sweeps_reduce_residual(self):
        """Repeated Gauss-Seidel sweeps shrink the residual."""
        dims = (4, 4, 4)
        system = assemble(_layered(dims), _uniform_source(dims))
        psi = np.zeros(system.node_dims)
        for _ in range(30):
            psi = sor_sweep(system, psi, omega=1.0)
        assert relative_residual(system, psi) < 0.5

    @pytest.mark.parametrize("omega", [0.0, 2.0, -1.0])
    def test_omega_range(self, omega):
        """The relaxation factor must lie strictly between 0 and 2."""
        dims = (2, 2, 2)
        system = assemble(_layered(dims), _uniform_source(dims))
        with pytest.raises(ValidationError):
            sor_sweep(system, np.zeros(system.node_dims), omega=omega)

    def test_restriction_is_prolongation_transpose(self, rng):
        """<R f, c> equals <f, P c>."""
        coarse = rng.normal(size=(3, 4, 5))
        fine = rng.normal(size=(5, 7, 9))
        assert np.vdot(restrict(fine), coarse) == pytest.approx(np.vdot(fine, prolong(coarse)))

    def test_prolongation_keeps_constants(self):
        """Interpolating a constant gives the same constant."""
        assert np.allclose(prolong(np.full((3, 3, 3), 4.0)), 4.0)

    @pytest.mark.parametrize(
        ("history", "expected"),
        [
            ([1.0, 2.0, 3.0, 4.0], True),
            ([1.0, 2.0, 3.0], False),
            ([4.0, 3.0, 2.0, 1.0], False),
            ([1.0, 2.0, 1.5, 3.0, 4.0], False),
            ([1.0, float("nan")], True),
        ],
    )
    def test_divergence_rule(self, history, expected):
        """Three consecutive increases or a non-finite residual count as divergence."""
        assert diverging(history) is expected


class TestResidualMonitor:
    """Divergence handling while iterating."""

    @pytest.fixture(scope="class")
    def solved(self):
        dims = (8, 8, 8)
        system = assemble(_layered(dims), _uniform_source(dims))
        psi, _ = solve(system, TIGHT)
        return system, psi.data

    @staticmethod
    def _monitor(system, krylov: bool) -> ResidualMonitor:
        cfg = SolveConfig(krylov=krylov)
        return ResidualMonitor(system, Multigrid(build_hierarchy(system, cfg), cfg), krylov)

    @staticmethod
    def _feed(monitor: ResidualMonitor, psi, fractions) -> None:
        # (1 - a) * psi leaves a relative residual of about a
        for a in fractions:
            monitor.record((1.0 - a) * psi)

    def test_recorded_residual(self, solved):
        """Scaling the solution back by a leaves relative residual a."""
        system, psi = solved
        monitor = self._monitor(system, krylov=True)
        self._feed(monitor, psi, [0.25])
        assert monitor.history == [pytest.approx(0.25, rel=1e-6)]

    def test_stationary_growth_diverges(self, solved):
        """Plain cycles stop after three consecutive increases."""
        system, psi = solved
        monitor = self._monitor(system, krylov=False)
        self._feed(monitor, psi, [0.1, 0.2, 0.3])
        with pytest.raises(SolverDivergenceError):
            self._feed(monitor, psi, [0.4])

    def test_krylov_tolerates_growth_below_start(self, solved):
        """CG iterates may rise for a while as long as they stay below the initial residual."""
        system, psi = solved
        monitor = self._monitor(system, krylov=True)
        self._feed(monitor, psi, [0.1, 0.2, 0.3, 0.4, 0.5])
        assert len(monitor.history) == 5

    def test_krylov_growth_past_start_diverges(self, solved):
        """CG stops once rising residuals exceed the initial one."""
        system, psi = solved
        monitor = self._monitor(system, krylov=True)
        self._feed(monitor, psi, [0.5, 0.9])
        with pytest.raises(SolverDivergenceError):
            self._feed(monitor, psi, [1.3, 1.7])


@pytest.mark.slow
class TestAcceptance:
    """Desk-scale runs against analytic and scaling expectations."""

    def test_homogeneous_sphere(self, make_sphere):
        """In a sphere under uniform dB/dt the field is |dB/dt| r / 2 around the axis."""
        dims, radius, dbdt = (64, 64, 64), 24.0, 1e4
        cond = make_sphere(dims, radius)
        dadt = _uniform_source(dims, (0.0, 0.0, dbdt))
        psi, stats = solve(assemble(cond, dadt))
        _, magnitude = electric_field(psi, dadt, cond)
        assert stats.converged
        assert stats.cycles <= 30

        axes = [(np.arange(n) + 0.5) - 0.5 * n for n in dims]
        x, y, z = np.meshgrid(*axes, indexing="ij")
        r_cyl = np.hypot(x, y)
        inner = (x**2 + y**2 + z**2 <= (0.8 * radius) ** 2) & (r_cyl >= 0.25 * radius)
        expected = 0.5 * dbdt * r_cyl[inner] * 1e-3
        assert np.abs(magnitude.data[inner] / expected - 1.0).max() <= 0.05

    def test_cycle_count_independent_of_mesh(self):
        """Cycles to 1e-6 change by at most two from 16^3 to 64^3."""
        counts = []
        for n in (16, 32, 64):
            dims = (n, n, n)
            _, stats = solve(assemble(_layered(dims), _uniform_source(dims)))
            assert stats.converged
            counts.append(stats.cycles)
        assert max(counts) - min(counts) <= 2
