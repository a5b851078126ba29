"""Command-line front end.

Every command writes its volumes in NVV1 and, when it has an output prefix,
a ``<prefix>_manifest.json`` run record. Results go to stdout, logs to stderr.
"""

import argparse
import sys

from condfield import __version__
from condfield.cli.commands import COMMANDS
from condfield.cli.validation import threads_of, validate_args
from condfield.core.manifest import ManifestRecorder
from condfield.exceptions.custom_errors import EXIT_USAGE
from condfield.exceptions.handlers import handle_cli_error
from condfield.models.types import Axis


def common_parser() -> argparse.ArgumentParser:
    """Flags shared by all commands; unset values fall back to the settings."""
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("common options")
    group.add_argument("--seed", type=int, help="random seed (default: CONDFIELD_SEED)")
    group.add_argument("--threads", type=int, help="worker cap (default: CONDFIELD_THREADS)")
    group.add_argument("--tol", type=float, help="solver relative residual tolerance")
    group.add_argument("--epochs", type=int, help="training epochs")
    group.add_argument("--batch", type=int, help="training batch size")
    group.add_argument("--tau", type=float, help="normalization margin (default: CONDFIELD_TAU)")
    group.add_argument(
        "--table",
        nargs="+",
        metavar="TABLE",
        help="tissue table(s): A, B or a table file (default: CONDFIELD_TABLE)",
    )
    group.add_argument(
        "--axis", choices=[a.value for a in Axis], help="restrict to one slicing direction"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condfield",
        description="Volume conductors, conductivity networks and TMS field dosimetry",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    common = common_parser()
    for register in COMMANDS:
        register(subparsers, common)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one command and return its process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    if getattr(args, "handler", None) is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    command = args.command_name
    try:
        validate_args(args)
        recorder = ManifestRecorder(command, argv, threads=threads_of(args))
        recorder.log.info(type="command_start", command=command, msg=f"Running {command}")
        prefix = args.handler(args, recorder)
        if prefix is not None:
            manifest = recorder.write(prefix)
            recorder.log.info(
                type="manifest_written", path=str(manifest), msg="Run manifest written"
            )
        else:
            recorder.log.debug(type="run_manifest", **recorder.manifest.model_dump(mode="json"))
    except Exception as exc:
        return handle_cli_error(exc, operation=command)
    return 0
