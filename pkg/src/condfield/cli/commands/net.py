"""``net train|infer``: one network per slicing direction."""

import argparse
import json
from pathlib import Path

from condfield.cli.validation import output_path, seed_of, tables_of, tau_of, threads_of
from condfield.core.condnet import (
    ALL_AXES,
    infer_volume,
    read_weights,
    train,
    write_loss_csv,
    write_weights,
)
from condfield.core.grid import RegionMask, normalize_mri
from condfield.core.manifest import ManifestRecorder
from condfield.core.phantom import (
    default_head_spec,
    jitter_spec,
    phantom_dataset,
    read_phantom_spec,
)
from condfield.core.volume_io import read_labels, read_region, read_scalar, write_volume
from condfield.exceptions.custom_errors import InputFileNotFoundError, ValidationError
from condfield.exceptions.types import ErrorContext
from condfield.models.types import Axis, NetConfig, PhantomSpec, TrainConfig, parse_config


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    net = subparsers.add_parser("net", help="conductivity networks")
    actions = net.add_subparsers(dest="action", required=True, metavar="ACTION")

    tr = actions.add_parser("train", parents=[common], help="train on synthetic phantoms")
    source = tr.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", nargs="+", help="phantom spec file(s), one subject each")
    source.add_argument("--subjects", type=int, help="number of varied default heads")
    tr.add_argument("--dims", nargs=3, type=int, default=[64, 64, 64], metavar=("NX", "NY", "NZ"))
    tr.add_argument("--voxel-mm", type=float, default=1.0)
    tr.add_argument("--depth", type=int, help="network depth I (default: 4)")
    tr.add_argument("--net-config", help="JSON file with a full network configuration")
    tr.add_argument("--out-prefix", required=True)
    tr.set_defaults(handler=run_train, command_name="net train")

    infer = actions.add_parser("infer", parents=[common], help="conductor from T1/T2 volumes")
    infer.add_argument("--weights-prefix", required=True, help="reads <prefix>_<axis>.cnw")
    infer.add_argument("--t1", required=True)
    infer.add_argument("--t2", required=True)
    head = infer.add_mutually_exclusive_group()
    head.add_argument("--mask", help="region volume; voxels outside are set to 0 S/m")
    head.add_argument("--labels", help="label volume; air voxels are set to 0 S/m")
    infer.add_argument("--batch-slices", type=int, default=8, help="slices per forward pass")
    infer.add_argument("--out-prefix", required=True)
    infer.set_defaults(handler=run_infer, command_name="net infer")


def _training_specs(args: argparse.Namespace, recorder: ManifestRecorder) -> list[PhantomSpec]:
    if args.spec:
        for path in args.spec:
            recorder.input(path)
        return [read_phantom_spec(path) for path in args.spec]
    seed = seed_of(args)
    base = default_head_spec(tuple(args.dims), args.voxel_mm, seed)
    return [jitter_spec(base, seed + k) for k in range(args.subjects)]


def _net_config(args: argparse.Namespace, dims: tuple[int, int, int], decoders: int) -> NetConfig:
    if args.net_config:
        path = Path(args.net_config)
        if not path.is_file():
            raise InputFileNotFoundError(str(path), ErrorContext(operation="net train"))
        return parse_config(NetConfig, json.loads(path.read_text()), "net train")
    n = dims[0]
    if len(set(dims)) != 1 or n & (n - 1):
        raise ValidationError(
            f"Training volumes must be cubic with a power-of-two side, got {dims}",
            context=ErrorContext(operation="net train"),
        )
    data: dict[str, int] = {"decoders": decoders, "size_power": n.bit_length() - 1}
    if args.depth is not None:
        data["depth"] = args.depth
    return parse_config(NetConfig, data, "net train")


def run_train(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    tables = tables_of(args)
    tau = tau_of(args)
    specs = _training_specs(args, recorder)
    tcfg_data: dict[str, int] = {"seed": seed_of(args)}
    if args.epochs is not None:
        tcfg_data["epochs"] = args.epochs
    if args.batch is not None:
        tcfg_data["batch_size"] = args.batch
    tcfg = parse_config(TrainConfig, tcfg_data, "net train")

    with recorder.stage("dataset"):
        data = phantom_dataset(specs, tables, tau, threads_of(args))
    cfg = _net_config(args, data.dims, len(tables))
    recorder.seed("train", tcfg.seed)
    for n, spec in enumerate(specs):
        recorder.seed(f"phantom{n}", spec.seed)
    recorder.config("net", cfg)
    recorder.config("train", tcfg)
    recorder.config("tables", {"tags": [t.tag for t in tables], "tau": tau})

    prefix = output_path(args.out_prefix)
    axes = [Axis(args.axis)] if args.axis else list(ALL_AXES)
    for axis in axes:
        with recorder.stage(f"train_{axis.value}"):
            net, curve = train(cfg, tcfg, data, axis)
        write_weights(net, recorder.output(f"{prefix}_{axis.value}.cnw"))
        write_loss_csv(curve, recorder.output(f"{prefix}_{axis.value}_loss.csv"))
        print(
            f"{axis.value}: {curve.train_slices} train / {curve.validation_slices} validation "
            f"slices, BCE {curve.train[0]:.4f} -> {curve.train[-1]:.4f} "
            f"(validation {curve.validation[-1]:.4f})"
        )
    return prefix


def run_infer(args: argparse.Namespace, recorder: ManifestRecorder) -> Path:
    tables = tables_of(args)
    tau = tau_of(args)
    nets = {}
    for axis in ALL_AXES:
        path = f"{args.weights_prefix}_{axis.value}.cnw"
        recorder.input(path)
        nets[axis] = read_weights(path)
    for path in (args.t1, args.t2):
        recorder.input(path)
    inputs = [normalize_mri(read_scalar(args.t1)), normalize_mri(read_scalar(args.t2))]

    mask: RegionMask | None = None
    if args.mask:
        recorder.input(args.mask)
        mask = read_region(args.mask, "head")
    elif args.labels:
        recorder.input(args.labels)
        labels = read_labels(args.labels)
        mask = RegionMask(labels.data != 0, "head", labels.voxel_size)

    with recorder.stage("infer"):
        conductors = infer_volume(
            nets, inputs, tables, tau, mask, args.batch_slices, threads_of(args)
        )
    recorder.config("tables", {"tags": [t.tag for t in tables], "tau": tau})

    prefix = output_path(args.out_prefix)
    for table, cond in zip(tables, conductors, strict=True):
        suffix = "_cond.nvv" if len(tables) == 1 else f"_cond_{table.tag}.nvv"
        out = write_volume(cond, recorder.output(f"{prefix}{suffix}"))
        print(
            f"table {table.tag}: conductivity [{cond.data.min():.4f}, {cond.data.max():.4f}] S/m"
            f" -> {out}"
        )
    return prefix
