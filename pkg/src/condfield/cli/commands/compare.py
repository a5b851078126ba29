"""``compare`` and ``report``: global error between two field volumes."""

import argparse
from pathlib import Path

from condfield.cli.validation import output_path
from condfield.core.grid import RegionMask, ScalarGrid, VectorGrid
from condfield.core.manifest import ManifestRecorder
from condfield.core.metrics import (
    format_report,
    head_regions,
    region_report,
    report_csv,
    sphere_roi,
)
from condfield.core.volume_io import read_labels, read_region, read_volume
from condfield.exceptions.custom_errors import VolumeFormatError
from condfield.exceptions.types import ErrorContext


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    compare = subparsers.add_parser("compare", parents=[common], help="GE over given regions")
    compare.add_argument("--e", required=True, help="reference field (vector or magnitude)")
    compare.add_argument("--ehat", required=True, help="estimated field")
    compare.add_argument("--region", nargs="+", required=True, help="region volume(s)")
    compare.add_argument("--out-prefix", help="write <prefix>_compare.csv and a manifest")
    compare.set_defaults(handler=run_compare, command_name="compare")

    report = subparsers.add_parser(
        "report", parents=[common], help="brain / non-brain / head and ROI table"
    )
    report.add_argument("--e", required=True)
    report.add_argument("--ehat", required=True)
    report.add_argument("--labels", required=True)
    report.add_argument("--brain-ids", nargs="+", type=int, help="tissue ids counted as brain")
    report.add_argument("--roi-center", nargs=3, type=float, metavar=("X", "Y", "Z"))
    report.add_argument("--roi-radius", type=float, default=5.0, help="ROI radius [mm]")
    report.add_argument("--out-prefix", help="write <prefix>_report.txt/.csv and a manifest")
    report.set_defaults(handler=run_report, command_name="report")


def read_field(path: str) -> ScalarGrid | VectorGrid:
    grid = read_volume(path)
    if not isinstance(grid, ScalarGrid | VectorGrid):
        raise VolumeFormatError(
            f"'{path}' holds {type(grid).__name__}, expected a field volume",
            ErrorContext(operation="read_field", path=path),
        )
    return grid


def run_compare(args: argparse.Namespace, recorder: ManifestRecorder) -> Path | None:
    for path in (args.e, args.ehat, *args.region):
        recorder.input(path)
    reference, estimate = read_field(args.e), read_field(args.ehat)
    regions = [read_region(path) for path in args.region]
    with recorder.stage("compare"):
        rows = region_report(reference, estimate, regions)
    for row in rows:
        print(
            f"{row.region}: GE {row.ge_percent:.2f}% "
            f"(std {row.std_percent:.2f}%, normalizer {row.normalizer:.4g} V/m, "
            f"{row.voxels} voxels)"
        )
    if not args.out_prefix:
        return None
    prefix = output_path(args.out_prefix)
    path = recorder.output(f"{prefix}_compare.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_csv(rows), encoding="utf-8")
    return prefix


def run_report(args: argparse.Namespace, recorder: ManifestRecorder) -> Path | None:
    for path in (args.e, args.ehat, args.labels):
        recorder.input(path)
    reference, estimate = read_field(args.e), read_field(args.ehat)
    labels = read_labels(args.labels)
    regions: list[RegionMask] = head_regions(labels, args.brain_ids)
    if args.roi_center is not None:
        regions.append(
            sphere_roi(args.roi_center, args.roi_radius, labels.dims, labels.voxel_size, "roi")
        )
    with recorder.stage("report"):
        rows = region_report(reference, estimate, regions)
    text = format_report(rows)
    print(text, end="")
    if not args.out_prefix:
        return None
    prefix = output_path(args.out_prefix)
    txt = recorder.output(f"{prefix}_report.txt")
    txt.parent.mkdir(parents=True, exist_ok=True)
    txt.write_text(text, encoding="utf-8")
    recorder.output(f"{prefix}_report.csv").write_text(report_csv(rows), encoding="utf-8")
    return prefix
