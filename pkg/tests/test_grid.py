"""Tests for voxel grids, slicing and MRI normalization."""

import numpy as np
import pytest

from condfield.core.grid import (
    LabelGrid,
    RegionMask,
    ScalarGrid,
    Slice2D,
    VectorGrid,
    normalize_mri,
    require_same_dims,
    slice_extract,
    slice_insert,
    stack_slices,
    volume_planes,
    voxel_centers_mm,
)
from condfield.exceptions.custom_errors import (
    DegenerateInputError,
    DimensionMismatchError,
    GridError,
    GridIndexError,
    NonFiniteValueError,
)
from condfield.models.types import Axis


class TestGridContainers:
    """Construction rules of the grid types."""

    def test_scalar_grid_is_read_only(self):
        """The stored array cannot be written through."""
        grid = ScalarGrid(np.zeros((2, 3, 4)))
        with pytest.raises(ValueError):
            grid.data[0, 0, 0] = 1.0

    def test_scalar_grid_copies_its_input(self):
        """Mutating the source array leaves the grid unchanged."""
        source = np.ones((2, 2, 2))
        grid = ScalarGrid(source)
        source[:] = 5.0
        assert np.all(grid.data == 1.0)

    def test_non_finite_values_rejected(self):
        """NaN in a scalar grid raises NonFiniteValueError."""
        data = np.zeros((2, 2, 2))
        data[1, 1, 1] = np.nan
        with pytest.raises(NonFiniteValueError):
            ScalarGrid(data)

    def test_wrong_rank_rejected(self):
        """A 2-D array is not a volume."""
        with pytest.raises(GridError):
            ScalarGrid(np.zeros((4, 4)))

    def test_non_positive_voxel_size_rejected(self):
        """Voxel edges must be positive."""
        with pytest.raises(GridError):
            ScalarGrid(np.zeros((2, 2, 2)), voxel_size=0.0)

    def test_vector_magnitude(self):
        """Magnitude is the Euclidean norm of the three components."""
        data = np.zeros((1, 1, 2, 3))
        data[0, 0, 0] = (3.0, 4.0, 0.0)
        data[0, 0, 1] = (0.0, 0.0, -2.0)
        magnitude = VectorGrid(data).magnitude()
        assert magnitude.data[0, 0, 0] == pytest.approx(5.0)
        assert magnitude.data[0, 0, 1] == pytest.approx(2.0)

    def test_label_histogram(self):
        """Histogram counts voxels per identifier."""
        data = np.array([0, 0, 8, 13, 13, 13], dtype=np.uint16).reshape(1, 2, 3)
        assert LabelGrid(data).histogram() == {0: 2, 8: 1, 13: 3}

    def test_region_disjointness(self):
        """Complementary masks are disjoint, a mask overlaps itself."""
        inside = np.zeros((3, 3, 3), dtype=bool)
        inside[1, 1, 1] = True
        a = RegionMask(inside, "a")
        b = RegionMask(~inside, "b")
        assert a.is_disjoint(b)
        assert not a.is_disjoint(a)

    def test_require_same_dims(self):
        """Differing shapes raise DimensionMismatchError."""
        require_same_dims((2, 3, 4), (2, 3, 4))
        with pytest.raises(DimensionMismatchError):
            require_same_dims((2, 3, 4), (2, 3, 5))

    def test_voxel_centers(self):
        """Voxel i has its center at (i + 0.5) * s."""
        x, y, z = voxel_centers_mm((3, 2, 1), 2.0)
        assert x.ravel().tolist() == [1.0, 3.0, 5.0]
        assert y.ravel().tolist() == [1.0, 3.0]
        assert z.ravel().tolist() == [1.0]


class TestSlicing:
    """Plane extraction, insertion and restacking."""

    @pytest.fixture
    def volume(self) -> ScalarGrid:
        return ScalarGrid(np.arange(2 * 3 * 4, dtype=np.float64).reshape(2, 3, 4), 1.5)

    @pytest.mark.parametrize(
        ("axis", "shape"),
        [(Axis.AXIAL, (2, 3)), (Axis.SAGITTAL, (3, 4)), (Axis.CORONAL, (2, 4))],
    )
    def test_plane_shapes(self, volume, axis, shape):
        """Axial planes are (x, y), sagittal (y, z) and coronal (x, z)."""
        assert slice_extract(volume, axis, 1).dims == shape

    def test_axial_plane_values(self, volume):
        """Axial plane k holds all voxels with z == k."""
        plane = slice_extract(volume, "axial", 2)
        assert np.array_equal(plane.data, volume.data[:, :, 2])

    def test_index_out_of_range(self, volume):
        """Indices outside the extent raise GridIndexError."""
        with pytest.raises(GridIndexError):
            slice_extract(volume, Axis.SAGITTAL, 2)
        with pytest.raises(GridIndexError):
            slice_extract(volume, Axis.AXIAL, -1)

    def test_insert_returns_a_copy(self, volume):
        """Inserting a plane leaves the source grid untouched."""
        plane = Slice2D(Axis.CORONAL, 1, np.full((2, 4), -1.0))
        updated = slice_insert(volume, plane)
        assert np.all(updated.data[:, 1, :] == -1.0)
        assert np.array_equal(volume.data, np.arange(24.0).reshape(2, 3, 4))
        assert updated.voxel_size == 1.5

    def test_insert_shape_mismatch(self, volume):
        """A plane of the wrong shape cannot be inserted."""
        plane = Slice2D(Axis.AXIAL, 0, np.zeros((3, 2)))
        with pytest.raises(DimensionMismatchError):
            slice_insert(volume, plane)

    @pytest.mark.parametrize("axis", list(Axis))
    def test_restack_is_identity(self, volume, axis):
        """Stacking every plane along an axis rebuilds the volume."""
        rebuilt = stack_slices(volume_planes(volume, axis), axis, volume.voxel_size)
        assert np.array_equal(rebuilt.data, volume.data)


class TestNormalizeMri:
    """Z-score followed by min-max rescaling."""

    def test_range_is_unit_interval(self, rng):
        """Output spans exactly [0, 1]."""
        grid = ScalarGrid(rng.normal(3.0, 2.0, size=(5, 6, 7)))
        out = normalize_mri(grid)
        assert out.data.min() == 0.0
        assert out.data.max() == 1.0

    def test_affine_invariance(self, rng):
        """Positive affine intensity changes do not alter the result."""
        data = rng.uniform(0.0, 10.0, size=(4, 4, 4))
        a = normalize_mri(ScalarGrid(data))
        b = normalize_mri(ScalarGrid(2.5 * data + 7.0))
        assert np.allclose(a.data, b.data, rtol=0.0, atol=1e-12)

    def test_matches_min_max_of_input(self, rng):
        """Z-scoring before min-max is the same as min-max alone."""
        data = rng.uniform(-1.0, 1.0, size=(3, 4, 5))
        expected = (data - data.min()) / (data.max() - data.min())
        assert np.allclose(normalize_mri(ScalarGrid(data)).data, expected, atol=1e-12)

    def test_constant_volume_is_degenerate(self):
        """A constant volume has zero variance."""
        with pytest.raises(DegenerateInputError):
            normalize_mri(ScalarGrid(np.full((3, 3, 3), 4.2)))
