"""``phantom gen``: labels and MRI contrasts of a nested-shell head."""

import argparse
from pathlib import Path

from condfield.cli.validation import output_path, seed_of, tables_of
from condfield.core.manifest import ManifestRecorder
from condfield.core.phantom import (
    default_head_spec,
    generate_phantom,
    jitter_spec,
    read_phantom_spec,
    write_phantom_spec,
)
from condfield.core.volume_io import write_volume
from condfield.models.types import PhantomSpec


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    phantom = subparsers.add_parser("phantom", help="synthetic head phantoms")
    actions = phantom.add_subparsers(dest="action", required=True, metavar="ACTION")

    gen = actions.add_parser("gen", parents=[common], help="write labels, T1 and T2 volumes")
    gen.add_argument("--spec", help="phantom spec file (default: seven-shell head)")
    gen.add_argument("--dims", nargs=3, type=int, default=[64, 64, 64], metavar=("NX", "NY", "NZ"))
    gen.add_argument("--voxel-mm", type=float, default=1.0, help="voxel edge [mm]")
    gen.add_argument("--noise", type=float, default=0.02, help="contrast noise of the default head")
    gen.add_argument(
        "--jitter", action="store_true", help="vary size, position and contrast with --seed"
    )
    gen.add_argument("--write-spec", action="store_true", help="also write <prefix>_spec.txt")
    gen.add_argument("--out-prefix", required=True)
    gen.set_defaults(handler=run_gen, command_name="phantom gen")


def phantom_spec_from_args(args: argparse.Namespace, recorder: ManifestRecorder) -> PhantomSpec:
    if args.spec:
        recorder.input(args.spec)
        spec = read_phantom_spec(args.spec)
        if args.seed is not None:
            spec = spec.model_copy(update={"seed": args.seed})
    else:
        seed = seed_of(args)
        spec = default_head_spec(tuple(args.dims), args.voxel_mm, seed, args.noise)
    if args.jitter:
        spec = jitter_spec(spec, spec.seed)
    return spec


def run_gen(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    spec = phantom_spec_from_args(args, recorder)
    table = tables_of(args)[0]
    recorder.seed("phantom", spec.seed)
    recorder.config("phantom", spec)

    with recorder.stage("generate"):
        volumes = generate_phantom(spec, table)

    prefix = output_path(args.out_prefix)
    with recorder.stage("write"):
        write_volume(volumes.labels, recorder.output(f"{prefix}_labels.nvv"))
        write_volume(volumes.t1, recorder.output(f"{prefix}_t1.nvv"))
        write_volume(volumes.t2, recorder.output(f"{prefix}_t2.nvv"))
        if args.write_spec:
            write_phantom_spec(spec, recorder.output(f"{prefix}_spec.txt"))

    counts = volumes.labels.histogram()
    nx, ny, nz = spec.dims
    print(f"phantom {nx}x{ny}x{nz} voxels of {spec.voxel_size:g} mm, seed {spec.seed}")
    for tissue_id in sorted(counts):
        name = "air" if tissue_id == 0 else table.entries[tissue_id].name
        print(f"  {tissue_id:>3} {name:<16} {counts[tissue_id]:>9} voxels")
    return prefix
