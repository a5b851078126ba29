"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from condfield.core.conductor import TissueTable, shipped_table
from condfield.core.grid import ScalarGrid
from condfield.core.phantom import PhantomVolumes, default_head_spec, generate_phantom
from condfield.models.types import NetConfig, PhantomSpec


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def table_a() -> TissueTable:
    return shipped_table("A")


@pytest.fixture(scope="session")
def table_b() -> TissueTable:
    return shipped_table("B")


@pytest.fixture(scope="session")
def small_spec() -> PhantomSpec:
    """Seven-shell head on a 16^3 grid."""
    return default_head_spec((16, 16, 16), 1.0, seed=3)


@pytest.fixture(scope="session")
def small_phantom(small_spec: PhantomSpec, table_a: TissueTable) -> PhantomVolumes:
    return generate_phantom(small_spec, table_a)


@pytest.fixture
def tiny_net_config() -> NetConfig:
    """Two encoders, one decoder, 16x16 slices and one skip level."""
    return NetConfig(
        encoders=2,
        decoders=1,
        depth=3,
        size_power=4,
        encoder_kernels=[[3, 3], [3, 3]],
        decoder_kernels=[[3, 3]],
        map_kernels=[3],
    )


def _sphere_conductor(
    dims: tuple[int, int, int], radius_mm: float, sigma: float = 0.33, voxel_size: float = 1.0
) -> ScalarGrid:
    """Homogeneous sphere centered in the grid, air outside."""
    axes = [(np.arange(n) + 0.5) * voxel_size - 0.5 * n * voxel_size for n in dims]
    x, y, z = np.meshgrid(*axes, indexing="ij")
    inside = x**2 + y**2 + z**2 <= radius_mm**2
    return ScalarGrid(np.where(inside, sigma, 0.0), voxel_size)


@pytest.fixture
def make_sphere():
    """Factory for homogeneous spherical conductors."""
    return _sphere_conductor
