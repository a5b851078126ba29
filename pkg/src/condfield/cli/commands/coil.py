"""``coil field``: dA/dt of a figure-eight coil or a uniform flux change."""

import argparse
from pathlib import Path

import numpy as np

from condfield.cli.validation import output_path, threads_of
from condfield.core.coil import dA_dt_field, read_coil_spec, uniform_dbdt_field, wire_from_spec
from condfield.core.manifest import ManifestRecorder
from condfield.core.volume_io import read_volume, write_volume


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    coil = subparsers.add_parser("coil", help="coil sources")
    actions = coil.add_subparsers(dest="action", required=True, metavar="ACTION")

    field = actions.add_parser("field", parents=[common], help="write the dA/dt vector volume")
    source = field.add_mutually_exclusive_group(required=True)
    source.add_argument("--coil", help="coil spec file")
    source.add_argument(
        "--uniform-dbdt", nargs=3, type=float, metavar=("BX", "BY", "BZ"), help="dB/dt [T/s]"
    )
    field.add_argument(
        "--center", nargs=3, type=float, metavar=("X", "Y", "Z"), help="uniform source origin [mm]"
    )
    grid = field.add_mutually_exclusive_group(required=True)
    grid.add_argument("--like", help="take dims and voxel size from this volume")
    grid.add_argument("--dims", nargs=3, type=int, metavar=("NX", "NY", "NZ"))
    field.add_argument("--voxel-mm", type=float, default=1.0, help="voxel edge with --dims [mm]")
    field.add_argument("--out", required=True)
    field.set_defaults(handler=run_field, command_name="coil field")


def run_field(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    if args.like:
        recorder.input(args.like)
        reference = read_volume(args.like)
        dims, voxel_size = reference.dims, reference.voxel_size
    else:
        dims, voxel_size = tuple(args.dims), args.voxel_mm

    with recorder.stage("source"):
        if args.coil:
            recorder.input(args.coil)
            spec = read_coil_spec(args.coil)
            recorder.config("coil", spec)
            dadt = dA_dt_field(wire_from_spec(spec), spec.didt, dims, voxel_size, threads_of(args))
        else:
            center = args.center or [0.5 * n * voxel_size for n in dims]
            recorder.config("uniform", {"dbdt": args.uniform_dbdt, "center_mm": list(center)})
            dadt = uniform_dbdt_field(args.uniform_dbdt, center, dims, voxel_size)

    out = write_volume(dadt, recorder.output(output_path(args.out)))
    peak = float(np.max(dadt.magnitude().data))
    print(f"dA/dt on {dims[0]}x{dims[1]}x{dims[2]} voxels, max |dA/dt| {peak:.4g} V/m -> {out}")
    return out.with_suffix("")
