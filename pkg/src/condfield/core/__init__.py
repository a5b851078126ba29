"""Numerical core: grids, conductors, phantoms, network, coil, solver and metrics."""
