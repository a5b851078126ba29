"""``field solve|efield``: induced potential and electric field."""

import argparse
from pathlib import Path

import numpy as np

from condfield.cli.validation import output_path
from condfield.core.manifest import ManifestRecorder
from condfield.core.spfd import assemble, electric_field, solve, write_solve_report
from condfield.core.volume_io import read_scalar, read_vector, write_volume
from condfield.models.types import SolveConfig, parse_config


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    field = subparsers.add_parser("field", help="electric field simulation")
    actions = field.add_subparsers(dest="action", required=True, metavar="ACTION")

    solve_cmd = actions.add_parser("solve", parents=[common], help="solve for the potential")
    solve_cmd.add_argument("--cond", required=True, help="conductivity volume [S/m]")
    solve_cmd.add_argument("--dadt", required=True, help="dA/dt vector volume [V/m]")
    solve_cmd.add_argument("--max-cycles", type=int, help="V-cycle budget")
    solve_cmd.add_argument("--omega", type=float, help="SOR relaxation factor in (0, 2)")
    solve_cmd.add_argument(
        "--no-krylov", action="store_true", help="plain V-cycles without conjugate gradients"
    )
    solve_cmd.add_argument("--out-prefix", required=True)
    solve_cmd.set_defaults(handler=run_solve, command_name="field solve")

    efield = actions.add_parser("efield", parents=[common], help="E from a solved potential")
    efield.add_argument("--cond", required=True)
    efield.add_argument("--dadt", required=True)
    efield.add_argument("--potential", required=True, help="node potential volume [V]")
    efield.add_argument("--out-prefix", required=True)
    efield.set_defaults(handler=run_efield, command_name="field efield")


def _solve_config(args: argparse.Namespace) -> SolveConfig:
    data: dict[str, object] = {"krylov": not args.no_krylov}
    for flag, key in (("tol", "tolerance"), ("max_cycles", "max_cycles"), ("omega", "omega")):
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    return parse_config(SolveConfig, data, "field solve")


def run_solve(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    cfg = _solve_config(args)
    recorder.config("solve", cfg)
    recorder.input(args.cond)
    recorder.input(args.dadt)
    cond = read_scalar(args.cond)
    dadt = read_vector(args.dadt)

    with recorder.stage("assemble"):
        system = assemble(cond, dadt)
    with recorder.stage("solve"):
        psi, stats = solve(system, cfg)
    with recorder.stage("efield"):
        e, magnitude = electric_field(psi, dadt, cond)

    prefix = output_path(args.out_prefix)
    write_volume(psi, recorder.output(f"{prefix}_potential.nvv"))
    write_volume(e, recorder.output(f"{prefix}_efield.nvv"))
    write_volume(magnitude, recorder.output(f"{prefix}_emag.nvv"))
    write_solve_report(stats, recorder.output(f"{prefix}_solve.txt"), cfg.tolerance)

    print(
        f"{'converged' if stats.converged else 'NOT converged'} after {stats.cycles} V-cycles "
        f"on {stats.levels} level(s): final relative residual {stats.final_relative_residual:.3e}"
        f" (tolerance {cfg.tolerance:.1e})"
    )
    print(f"max |E| {float(np.max(magnitude.data)):.4g} V/m")
    return prefix


def run_efield(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    for path in (args.cond, args.dadt, args.potential):
        recorder.input(path)
    cond = read_scalar(args.cond)
    dadt = read_vector(args.dadt)
    psi = read_scalar(args.potential)
    with recorder.stage("efield"):
        e, magnitude = electric_field(psi, dadt, cond)

    prefix = output_path(args.out_prefix)
    write_volume(e, recorder.output(f"{prefix}_efield.nvv"))
    write_volume(magnitude, recorder.output(f"{prefix}_emag.nvv"))
    print(f"max |E| {float(np.max(magnitude.data)):.4g} V/m")
    return prefix
