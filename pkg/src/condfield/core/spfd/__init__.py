"""Scalar-potential finite-difference solver."""

from condfield.core.spfd.field import (
    electric_field,
    format_solve_report,
    node_current_imbalance,
    write_solve_report,
)
from condfield.core.spfd.multigrid import SweepOrder, relative_residual, solve, sor_sweep
from condfield.core.spfd.system import SpfdSystem, assemble

__all__ = [
    "SpfdSystem",
    "SweepOrder",
    "assemble",
    "electric_field",
    "format_solve_report",
    "node_current_imbalance",
    "relative_residual",
    "solve",
    "sor_sweep",
    "write_solve_report",
]
