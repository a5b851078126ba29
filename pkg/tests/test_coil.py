"""Tests for the figure-eight coil model and its vector potential."""

import numpy as np
import pytest
from scipy.integrate import quad

from condfield.core.coil import (
    MU0_OVER_4PI,
    WirePath,
    build_figure_eight,
    coil_frame,
    dA_dt_field,
    format_coil_spec,
    loop_circulation,
    parse_coil_spec,
    read_coil_spec,
    segment_kernel,
    uniform_dbdt_field,
    vector_potential,
    wire_from_spec,
    write_coil_spec,
)
from condfield.exceptions.custom_errors import (
    ConfigurationError,
    DegeneratePlacementError,
    SingularEvaluationError,
    ValidationError,
)
from condfield.models.types import CoilPlacement, CoilSpec


@pytest.fixture
def wire() -> WirePath:
    return build_figure_eight(CoilPlacement(center_mm=(0.0, 0.0, 0.0)))


class TestSegmentKernel:
    """Closed-form potential of straight segments."""

    @pytest.mark.parametrize("point", [(3.0, 4.0, 2.0), (-7.0, 1.0, 0.5), (12.0, 0.0, 3.0)])
    def test_matches_numerical_quadrature(self, point):
        """The closed form equals the line integral of 1/r along the segment."""
        start = np.array([[0.0, 0.0, 0.0]])
        end = np.array([[10.0, 0.0, 0.0]])
        p = np.asarray(point)
        integral, _ = quad(
            lambda s: 1.0 / np.linalg.norm(p - np.array([s, 0.0, 0.0])),
            0.0,
            10.0,
            epsabs=0.0,
            epsrel=1e-12,
        )
        a = segment_kernel(start, end, p[None, :])
        assert a[0, 0] == pytest.approx(MU0_OVER_4PI * integral, rel=1e-9)
        assert a[0, 1] == 0.0
        assert a[0, 2] == 0.0

    def test_split_segment_is_additive(self):
        """Two halves of a segment give the same potential as the whole."""
        p = np.array([[1.0, 2.0, 3.0]])
        whole = segment_kernel(np.array([[0.0, 0.0, 0.0]]), np.array([[0.0, 8.0, 0.0]]), p)
        halves = segment_kernel(
            np.array([[0.0, 0.0, 0.0], [0.0, 4.0, 0.0]]),
            np.array([[0.0, 4.0, 0.0], [0.0, 8.0, 0.0]]),
            p,
        )
        assert np.allclose(halves, whole, rtol=1e-12, atol=0.0)

    def test_point_on_wire_is_singular(self):
        """Evaluating on the wire raises SingularEvaluationError."""
        with pytest.raises(SingularEvaluationError):
            segment_kernel(
                np.array([[0.0, 0.0, 0.0]]),
                np.array([[10.0, 0.0, 0.0]]),
                np.array([[5.0, 0.0, 0.0]]),
            )


class TestFigureEight:
    """Geometry of the two-loop coil."""

    def test_loops_close(self, wire):
        """Each loop ends where it starts."""
        for loop in wire.loops:
            assert np.array_equal(loop[0], loop[-1])

    def test_opposite_circulation(self, wire):
        """The first loop runs counterclockwise about the normal, the second clockwise."""
        assert loop_circulation(wire.loops[0], wire.normal) == pytest.approx(1.0, abs=0.01)
        assert loop_circulation(wire.loops[1], wire.normal) == pytest.approx(-1.0, abs=0.01)
        assert wire.circulation == (1, -1)

    def test_loops_touch_at_center(self, wire):
        """Both loops pass through the coil center."""
        for loop in wire.loops:
            closest = np.linalg.norm(loop - wire.center_mm, axis=1).min()
            assert closest == pytest.approx(0.0, abs=1e-9)

    def test_mean_winding_radius(self, wire):
        """Loop radius is a quarter of the summed diameters."""
        radius = 0.25 * (97.0 + 47.0)
        center = wire.loops[0][:-1].mean(axis=0)
        distances = np.linalg.norm(wire.loops[0][:-1] - center, axis=1)
        assert np.allclose(distances, radius)

    def test_wire_length(self, wire):
        """Each loop is a regular polygon inscribed in the winding circle."""
        radius = 0.25 * (97.0 + 47.0)
        sides = len(wire.loops[0]) - 1
        polygon = 2.0 * sides * radius * np.sin(np.pi / sides)
        assert wire.length_mm == pytest.approx(2.0 * polygon, rel=1e-12)

    def test_flipped_normal_flips_circulation(self, wire):
        """Turning the coil over reverses each loop's sense about the original normal."""
        flipped = build_figure_eight(CoilPlacement(normal=(0.0, 0.0, -1.0)))
        for loop, original in zip(flipped.loops, wire.loops, strict=True):
            before = loop_circulation(original, wire.normal)
            after = loop_circulation(loop, wire.normal)
            assert after == pytest.approx(-before, rel=1e-12)

    def test_standoff_lifts_along_normal(self):
        """The standoff moves the coil center along the normal."""
        placement = CoilPlacement(
            center_mm=(1.0, 2.0, 3.0), normal=(0.0, 1.0, 0.0), standoff_mm=4.0
        )
        wire = build_figure_eight(placement)
        assert np.allclose(wire.center_mm, (1.0, 6.0, 3.0))

    def test_frame_is_orthonormal(self):
        """The coil frame is a right-handed orthonormal basis for any angle."""
        for angle in (0.0, 37.0, 90.0, 200.0):
            e1, e2, n = coil_frame(CoilPlacement(normal=(1.0, 1.0, 0.5), angle_deg=angle))
            basis = np.stack([e1, e2, n])
            assert np.allclose(basis @ basis.T, np.eye(3), atol=1e-12)
            assert np.allclose(np.cross(e1, e2), n, atol=1e-12)

    def test_angle_rotates_in_plane(self):
        """A 90 degree angle turns e1 onto the former e2."""
        e1, e2, _ = coil_frame(CoilPlacement())
        turned, _, _ = coil_frame(CoilPlacement(angle_deg=90.0))
        assert np.allclose(turned, e2, atol=1e-12)
        assert np.allclose(e1, (1.0, 0.0, 0.0))

    def test_zero_normal(self):
        """A zero normal is a degenerate placement."""
        with pytest.raises(DegeneratePlacementError):
            build_figure_eight(CoilPlacement(normal=(0.0, 0.0, 0.0)))

    def test_too_few_segments(self):
        """Loops need at least eight segments."""
        with pytest.raises(ValidationError):
            build_figure_eight(CoilPlacement(), segments_per_loop=4)


class TestVectorPotential:
    """Field patterns of loops and the figure-eight."""

    def test_single_loop_vanishes_on_axis(self, wire):
        """A circular loop has no vector potential on its symmetry axis."""
        loop = wire.loops[0]
        single = WirePath((loop,), (1,), wire.normal, wire.center_mm)
        axis_center = loop[:-1].mean(axis=0)
        points = axis_center + np.outer([-30.0, -10.0, 5.0, 40.0], wire.normal)
        a = vector_potential(single, points)
        reference = np.abs(vector_potential(single, points + [10.0, 0.0, 0.0])).max()
        assert np.abs(a).max() < 1e-8 * reference

    def test_peak_below_center(self, wire):
        """Under the coil |A| peaks near the junction and points along -e2."""
        e1, e2, n = coil_frame(CoilPlacement())
        offsets = np.linspace(-100.0, 100.0, 201)
        points = np.outer(offsets, e1) - 15.0 * n
        a = vector_potential(wire, points)
        magnitude = np.linalg.norm(a, axis=1)
        peak = int(np.argmax(magnitude))
        assert abs(offsets[peak]) <= 10.0
        assert np.dot(a[peak], e2) < 0.0

    def test_linear_in_current(self, wire):
        """The potential scales with the current."""
        points = np.array([[5.0, -3.0, -20.0]])
        assert np.allclose(
            vector_potential(wire, points, 3.0),
            3.0 * vector_potential(wire, points),
            rtol=1e-12,
            atol=0.0,
        )

    def test_refinement_converges_quadratically(self):
        """Doubling the segments shrinks the change in A by about four each time."""
        placement = CoilPlacement()
        u, v = np.meshgrid(np.linspace(-100.0, 100.0, 11), np.linspace(-40.0, 40.0, 5))
        points = np.stack([u.ravel(), v.ravel(), np.full(u.size, -15.0)], axis=1)
        potentials = {
            k: vector_potential(build_figure_eight(placement, segments_per_loop=k), points)
            for k in (16, 32, 64, 128)
        }
        changes = [np.abs(potentials[2 * k] - potentials[k]).max() for k in (16, 32, 64)]
        assert changes[0] > changes[1] > changes[2] > 0.0
        assert changes[0] / changes[1] >= 3.0
        assert changes[1] / changes[2] >= 3.0

    def test_mirror_across_junction_line(self, wire):
        """Reflecting through the plane between the loops mirrors A."""
        points = np.array([[12.0, 7.0, -20.0], [55.0, -30.0, -8.0], [3.0, 0.0, 15.0]])
        mirror = np.array([-1.0, 1.0, 1.0])
        a = vector_potential(wire, points)
        reflected = vector_potential(wire, points * mirror)
        scale = np.abs(a).max()
        assert np.allclose(reflected, a * mirror, rtol=1e-9, atol=1e-12 * scale)

    def test_mirror_across_loop_axis(self, wire):
        """Reflecting through the plane of both loop centers gives the mirrored negation of A."""
        points = np.array([[12.0, 7.0, -20.0], [55.0, -30.0, -8.0], [-40.0, 9.0, 15.0]])
        mirror = np.array([1.0, -1.0, 1.0])
        a = vector_potential(wire, points)
        reflected = vector_potential(wire, points * mirror)
        scale = np.abs(a).max()
        assert np.allclose(reflected, -a * mirror, rtol=1e-9, atol=1e-12 * scale)

    def test_field_decays_below_center(self):
        """|dA/dt| under the coil center falls off with depth."""
        spec = CoilSpec(placement=CoilPlacement(center_mm=(0.5, 0.5, 60.5)))
        field = dA_dt_field(wire_from_spec(spec), spec.didt, (1, 1, 60), 1.0)
        magnitude = np.linalg.norm(field.data[0, 0], axis=-1)
        # voxel k sits 60 - k mm below the coil
        assert magnitude[10] < magnitude[50]
        assert np.all(np.diff(magnitude[10:51]) > 0.0)

    def test_field_volume_shape_and_threads(self):
        """dA/dt volumes do not depend on the worker count."""
        spec = CoilSpec(placement=CoilPlacement(center_mm=(8.0, 8.0, 30.0)))
        wire = wire_from_spec(spec)
        one = dA_dt_field(wire, spec.didt, (16, 16, 20), 1.0, threads=1)
        many = dA_dt_field(wire, spec.didt, (16, 16, 20), 1.0, threads=4)
        assert one.dims == (16, 16, 20)
        assert np.array_equal(one.data, many.data)

    def test_field_is_didt_times_potential(self):
        """dA/dt at a voxel center is dI/dt times the unit-current potential."""
        spec = CoilSpec(placement=CoilPlacement(center_mm=(2.0, 2.0, 20.0)))
        wire = wire_from_spec(spec)
        field = dA_dt_field(wire, spec.didt, (4, 4, 4), 1.0)
        expected = spec.didt * vector_potential(wire, [[1.5, 2.5, 3.5]])[0]
        assert np.allclose(field.data[1, 2, 3], expected, rtol=1e-12)

    def test_non_finite_didt(self, wire):
        """dI/dt must be finite."""
        with pytest.raises(ValidationError):
            dA_dt_field(wire, float("inf"), (2, 2, 2))


class TestUniformSource:
    """dA/dt of a spatially uniform flux change."""

    def test_zero_at_center(self):
        """The field vanishes at the reference point."""
        field = uniform_dbdt_field((0.0, 0.0, 1.0), (1.5, 1.5, 1.5), (4, 4, 4))
        assert np.all(field.data[1, 1, 1] == 0.0)

    def test_cross_product(self):
        """dA/dt is half of dB/dt cross r, with r in meters."""
        field = uniform_dbdt_field((0.0, 0.0, 1.0), (0.5, 0.5, 0.5), (4, 4, 4))
        assert np.allclose(field.data[1, 0, 0], (0.0, 5e-4, 0.0))
        assert np.allclose(field.data[0, 2, 0], (-1e-3, 0.0, 0.0))

    def test_azimuthal_and_linear(self):
        """The field is perpendicular to r and to dB/dt and grows with distance."""
        field = uniform_dbdt_field((0.0, 0.0, 2.0), (8.0, 8.0, 8.0), (16, 16, 16))
        near, far = field.data[8, 7, 3], field.data[9, 6, 3]
        assert near[2] == 0.0
        assert np.linalg.norm(far) == pytest.approx(3.0 * np.linalg.norm(near))


class TestCoilSpecFiles:
    """The key-value coil spec format."""

    def test_round_trip(self, tmp_path):
        """Writing then reading a spec reproduces it."""
        spec = CoilSpec(
            placement=CoilPlacement(
                center_mm=(32.0, 30.5, 70.0), normal=(0.0, 0.2, 1.0), angle_deg=45.0
            ),
            segments_per_loop=32,
            didt=1.5e7,
        )
        assert read_coil_spec(write_coil_spec(spec, tmp_path / "coil.txt")) == spec

    def test_defaults(self):
        """Omitted keys take the standard coil."""
        spec = parse_coil_spec("center = 0 0 50\n")
        assert spec.outer_diameter_mm == 97.0
        assert spec.inner_diameter_mm == 47.0
        assert spec.didt == pytest.approx(6.7e7)
        assert spec.placement.normal == (0.0, 0.0, 1.0)

    def test_unknown_key(self):
        """Unrecognized keys are configuration errors."""
        with pytest.raises(ConfigurationError):
            parse_coil_spec("center = 0 0 0\nturns = 9\n")

    def test_inner_larger_than_outer(self):
        """Diameters must be ordered."""
        with pytest.raises(ConfigurationError):
            parse_coil_spec("outer_diameter_mm = 40\ninner_diameter_mm = 50\n")

    def test_format_lists_every_key(self):
        """The formatted spec names every key once."""
        keys = [line.split("=")[0].strip() for line in format_coil_spec(CoilSpec()).splitlines()]
        assert len(keys) == len(set(keys)) == 8
