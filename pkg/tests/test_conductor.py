"""Tests for tissue tables and the conductor normalization chain."""

import numpy as np
import pytest

from condfield.core import conductor
from condfield.core.conductor import (
    assign_uniform,
    average_directions,
    denormalize,
    format_tissue_table,
    normalize_conductor,
    parse_tissue_table,
    resolve_table,
    roi_conductivity_stats,
    shipped_table,
    tissue_region,
)
from condfield.core.grid import LabelGrid, RegionMask, ScalarGrid
from condfield.exceptions.custom_errors import (
    ConductorRangeError,
    EmptyRegionError,
    TissueTableError,
    UnknownTissueError,
)


class TestTissueTables:
    """Shipped tables and the table text format."""

    def test_table_a_values(self, table_a):
        """Table A carries the 10 kHz Cole-Cole values."""
        assert table_a.sigma(conductor.GM) == pytest.approx(0.1)
        assert table_a.sigma(conductor.WM) == pytest.approx(0.07)
        assert table_a.sigma(conductor.CSF) == pytest.approx(2.0)
        assert table_a.sigma_max == pytest.approx(2.0)

    def test_lookup_by_name(self, table_a):
        """Tissue names resolve to identifiers regardless of case."""
        assert table_a.id_of("gm") == conductor.GM
        assert table_a.id_of("CSF") == conductor.CSF
        with pytest.raises(TissueTableError):
            table_a.id_of("cartilage")

    def test_table_b_values(self, table_b):
        """Table B carries the typical values; CSF is the maximum."""
        assert table_b.sigma(conductor.GM) == pytest.approx(0.276)
        assert table_b.sigma_max == pytest.approx(1.654)

    def test_tables_share_identifiers(self, table_a, table_b):
        """Both shipped tables cover the same tissues."""
        assert set(table_a.entries) == set(table_b.entries)

    def test_air_is_implicit(self, table_a):
        """Identifier 0 maps to zero conductivity."""
        assert table_a.sigma(0) == 0.0

    def test_unknown_identifier(self, table_a):
        """Looking up an absent tissue raises UnknownTissueError."""
        with pytest.raises(UnknownTissueError):
            table_a.sigma(99)

    def test_unknown_shipped_letter(self):
        """Only A and B are shipped."""
        with pytest.raises(TissueTableError):
            shipped_table("C")

    def test_resolve_accepts_lowercase_letter(self):
        """Table letters are case-insensitive."""
        assert resolve_table("b").sigma_max == pytest.approx(1.654)

    def test_format_parse_round_trip(self, table_b):
        """Formatting then parsing reproduces the table."""
        again = parse_tissue_table(format_tissue_table(table_b))
        assert again == table_b

    def test_resolve_from_file(self, tmp_path):
        """Paths are read as table files."""
        path = tmp_path / "custom.txt"
        path.write_text("# tag = mine\n1 Gel 0.5\n2 Saline 1.5\n", encoding="ascii")
        table = resolve_table(str(path))
        assert table.tag == "mine"
        assert table.sigma_max == pytest.approx(1.5)

    @pytest.mark.parametrize(
        "text",
        [
            "1 GM\n",
            "1 GM 0.1\n1 WM 0.07\n",
            "x GM 0.1\n",
            "1 GM -0.1\n",
            "0 Air 0.1\n",
            "# only comments\n",
        ],
    )
    def test_malformed_tables(self, text):
        """Bad rows, duplicates and non-positive values are rejected."""
        with pytest.raises(TissueTableError):
            parse_tissue_table(text)


class TestNormalization:
    """Uniform assignment and the normalize/denormalize pair."""

    @pytest.fixture
    def labels(self) -> LabelGrid:
        data = np.array([[[0, conductor.GM], [conductor.WM, conductor.CSF]]], dtype=np.uint16)
        return LabelGrid(data)

    def test_assign_uniform(self, labels, table_a):
        """Every voxel takes its tissue's tabulated value."""
        cond = assign_uniform(labels, table_a)
        assert cond.data.ravel().tolist() == pytest.approx([0.0, 0.1, 0.07, 2.0])

    def test_assign_unknown_tissue(self, table_a):
        """Labels absent from the table raise UnknownTissueError."""
        with pytest.raises(UnknownTissueError):
            assign_uniform(LabelGrid(np.full((1, 1, 2), 42, dtype=np.uint16)), table_a)

    def test_maximum_maps_to_one_minus_tau(self, labels, table_a):
        """sigma_max lands on 1 - tau."""
        normalized = normalize_conductor(assign_uniform(labels, table_a), table_a.norm_params(0.1))
        assert normalized.data.max() == pytest.approx(0.9)
        assert normalized.data.min() == 0.0

    @pytest.mark.parametrize("letter", ["A", "B"])
    @pytest.mark.parametrize("tau", [0.05, 0.1, 0.3])
    def test_denormalize_inverts_normalize(self, labels, letter, tau):
        """Normalizing then denormalizing restores conductivities."""
        table = shipped_table(letter)
        cond = assign_uniform(labels, table)
        params = table.norm_params(tau)
        restored = denormalize(normalize_conductor(cond, params), params)
        assert np.allclose(restored.data, cond.data, rtol=1e-12, atol=0.0)

    def test_normalize_rejects_negative(self, table_a):
        """Negative conductivities are out of range."""
        with pytest.raises(ConductorRangeError):
            normalize_conductor(ScalarGrid(np.full((1, 1, 1), -0.1)), table_a.norm_params())

    def test_normalize_rejects_above_maximum(self, table_b):
        """Values above the table maximum are out of range."""
        cond = ScalarGrid(np.full((1, 1, 1), 2.0))
        with pytest.raises(ConductorRangeError):
            normalize_conductor(cond, table_b.norm_params(0.1))

    def test_default_tau_from_settings(self, table_a):
        """Without an explicit tau the configured default is used."""
        assert table_a.norm_params().tau == pytest.approx(0.1)


class TestDirectionAverage:
    """Voxelwise mean of three direction volumes."""

    def test_mean_value(self):
        """The average of 1, 2 and 6 is 3."""
        grids = [ScalarGrid(np.full((2, 2, 2), v)) for v in (1.0, 2.0, 6.0)]
        assert np.all(average_directions(*grids).data == 3.0)

    def test_order_independent(self, rng):
        """Any permutation of the arguments gives identical bits."""
        a, b, c = (ScalarGrid(rng.uniform(size=(4, 4, 4))) for _ in range(3))
        reference = average_directions(a, b, c).data
        for order in ((b, c, a), (c, a, b), (a, c, b), (b, a, c), (c, b, a)):
            assert np.array_equal(average_directions(*order).data, reference)


class TestRoiStats:
    """Conductivity statistics inside a region."""

    def test_midpoint_quartiles(self):
        """Quartiles of 1..4 fall halfway between order statistics."""
        cond = ScalarGrid(np.array([1.0, 2.0, 3.0, 4.0, 9.0]).reshape(1, 1, 5))
        inside = np.array([True, True, True, True, False]).reshape(1, 1, 5)
        stats = roi_conductivity_stats(cond, RegionMask(inside, "roi"))
        assert stats.count == 4
        assert stats.mean == pytest.approx(2.5)
        assert (stats.q1, stats.median, stats.q3) == pytest.approx((1.5, 2.5, 3.5))
        assert (stats.minimum, stats.maximum) == (1.0, 4.0)

    def test_empty_region(self):
        """A region without voxels raises EmptyRegionError."""
        cond = ScalarGrid(np.ones((2, 2, 2)))
        with pytest.raises(EmptyRegionError):
            roi_conductivity_stats(cond, RegionMask(np.zeros((2, 2, 2), dtype=bool), "none"))

    def test_tissue_region(self, small_phantom, table_a):
        """Stats over the grey matter region of a uniform conductor equal its sigma."""
        labels = small_phantom.labels
        region = tissue_region(labels, {conductor.GM}, "gm")
        stats = roi_conductivity_stats(assign_uniform(labels, table_a), region)
        assert stats.count == labels.histogram()[conductor.GM]
        assert stats.std == pytest.approx(0.0, abs=1e-15)
        assert stats.median == pytest.approx(0.1)
