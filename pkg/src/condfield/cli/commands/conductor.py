"""``conductor assign|normalize|stats``."""

import argparse
from pathlib import Path

from condfield.cli.validation import output_path, tables_of, tau_of
from condfield.core.conductor import (
    assign_uniform,
    denormalize,
    normalize_conductor,
    roi_conductivity_stats,
    tissue_region,
)
from condfield.core.manifest import ManifestRecorder
from condfield.core.volume_io import read_labels, read_scalar, write_volume


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    conductor = subparsers.add_parser("conductor", help="volume conductors")
    actions = conductor.add_subparsers(dest="action", required=True, metavar="ACTION")

    assign = actions.add_parser("assign", parents=[common], help="uniform conductor from labels")
    assign.add_argument("--labels", required=True)
    assign.add_argument("--out", required=True, help="conductivity volume [S/m]")
    assign.set_defaults(handler=run_assign, command_name="conductor assign")

    normalize = actions.add_parser(
        "normalize", parents=[common], help="map S/m onto [0, 1 - tau] or back"
    )
    normalize.add_argument("--cond", required=True)
    normalize.add_argument("--out", required=True)
    normalize.add_argument("--inverse", action="store_true", help="denormalize to S/m")
    normalize.set_defaults(handler=run_normalize, command_name="conductor normalize")

    stats = actions.add_parser("stats", parents=[common], help="per-tissue conductivity summary")
    stats.add_argument("--cond", required=True)
    stats.add_argument("--labels", required=True)
    stats.set_defaults(handler=run_stats, command_name="conductor stats")


def _prefix(out: Path) -> Path:
    return out.with_suffix("")


def run_assign(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    table = tables_of(args)[0]
    recorder.input(args.labels)
    labels = read_labels(args.labels)
    with recorder.stage("assign"):
        cond = assign_uniform(labels, table)
    out = write_volume(cond, recorder.output(output_path(args.out)))
    recorder.config("table", {"tag": table.tag, "sigma_max": table.sigma_max})
    print(f"uniform conductor from table {table.tag}: max {table.sigma_max:g} S/m -> {out}")
    return _prefix(out)


def run_normalize(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    table = tables_of(args)[0]
    params = table.norm_params(tau_of(args))
    recorder.input(args.cond)
    recorder.config("norm", params)
    cond = read_scalar(args.cond)
    with recorder.stage("denormalize" if args.inverse else "normalize"):
        result = denormalize(cond, params) if args.inverse else normalize_conductor(cond, params)
    out = write_volume(result, recorder.output(output_path(args.out)))
    unit = "S/m" if args.inverse else "normalized"
    print(
        f"table {table.tag}, tau {params.tau:g}: range "
        f"[{result.data.min():.4g}, {result.data.max():.4g}] ({unit}) -> {out}"
    )
    return _prefix(out)


def run_stats(args: argparse.Namespace, recorder: ManifestRecorder) -> None:
    table = tables_of(args)[0]
    recorder.input(args.cond)
    recorder.input(args.labels)
    cond = read_scalar(args.cond)
    labels = read_labels(args.labels)
    print(f"{'tissue':<16} {'voxels':>8} {'mean':>9} {'std':>9} {'median':>9}  [S/m]")
    for tissue_id, count in sorted(labels.histogram().items()):
        if tissue_id == 0 or count == 0:
            continue
        name = table.entries[tissue_id].name if tissue_id in table.entries else str(tissue_id)
        row = roi_conductivity_stats(cond, tissue_region(labels, [tissue_id], name))
        print(
            f"{name:<16} {row.count:>8} {row.mean:>9.4f} {row.std:>9.4f} {row.median:>9.4f}"
        )
    return None
