"""CNW1 weight file reader and writer.

Layout::

    CNW1
    config <NetConfig as one-line JSON>
    seed <int>
    tensor <name> <d0,d1,...> <byte offset> <element count>
    ...
    end
    <little-endian f32 payload>

Parameters and batch-norm running statistics are both stored. Offsets count
from the first payload byte.
"""

import json
from pathlib import Path

import numpy as np

from condfield.core.condnet.network import CondNet, build_network
from condfield.exceptions.custom_errors import (
    BaseError,
    InputFileNotFoundError,
    NetworkShapeError,
    WeightFileError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import NetConfig, parse_config
from condfield.services import condnet_logger

MAGIC = "CNW1"
_F32 = np.dtype("<f4")


def encode_weights(net: CondNet) -> bytes:
    tensors = {**net.parameters(), **net.buffers()}
    lines = [MAGIC, f"config {net.cfg.model_dump_json()}", f"seed {net.seed}"]
    chunks = []
    offset = 0
    for name in sorted(tensors):
        data = np.ascontiguousarray(tensors[name]).astype(_F32)
        shape = ",".join(str(n) for n in data.shape)
        lines.append(f"tensor {name} {shape} {offset} {data.size}")
        chunks.append(data.tobytes())
        offset += data.nbytes
    lines.append("end")
    return ("\n".join(lines) + "\n").encode("ascii") + b"".join(chunks)


def write_weights(net: CondNet, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_weights(net)
    path.write_bytes(data)
    condnet_logger.debug(
        type="weights_written", path=str(path), size=len(data), msg=f"Weights written: {path}"
    )
    return path


def _manifest(raw: bytes, context: ErrorContext) -> tuple[list[str], bytes]:
    marker = raw.find(b"\nend\n")
    if not raw.startswith(f"{MAGIC}\n".encode("ascii")):
        raise WeightFileError(f"expected magic '{MAGIC}'", context)
    if marker < 0:
        raise WeightFileError("missing 'end' line", context)
    try:
        header = raw[:marker].decode("ascii")
    except UnicodeDecodeError as error:
        raise WeightFileError("non-ASCII manifest", context) from error
    return header.split("\n")[1:], raw[marker + len(b"\nend\n") :]


def decode_weights(raw: bytes, source: str = "<bytes>") -> CondNet:
    """Rebuild a network from CNW1 bytes."""
    context = ErrorContext(operation="read_weights", path=source)
    lines, payload = _manifest(raw, context)
    if len(lines) < 2 or not lines[0].startswith("config ") or not lines[1].startswith("seed "):
        raise WeightFileError("manifest must start with 'config' and 'seed' lines", context)
    try:
        cfg = parse_config(NetConfig, json.loads(lines[0][len("config ") :]), "read_weights")
        seed = int(lines[1].split()[1])
    except (json.JSONDecodeError, ValueError, IndexError) as error:
        raise WeightFileError(f"bad config or seed line: {error}", context) from error

    tensors: dict[str, np.ndarray] = {}
    for line in lines[2:]:
        parts = line.split()
        if len(parts) != 5 or parts[0] != "tensor":
            raise WeightFileError(f"bad tensor line '{line[:60]}'", context)
        try:
            shape = tuple(int(n) for n in parts[2].split(",") if n)
            offset, count = int(parts[3]), int(parts[4])
        except ValueError as error:
            raise WeightFileError(f"bad numbers in '{line[:60]}'", context) from error
        if int(np.prod(shape)) != count:
            raise WeightFileError(f"tensor '{parts[1]}' shape {shape} holds {count}", context)
        end = offset + count * _F32.itemsize
        if offset < 0 or end > len(payload):
            raise WeightFileError(f"tensor '{parts[1]}' runs past the payload", context)
        flat = np.frombuffer(payload, dtype=_F32, count=count, offset=offset)
        tensors[parts[1]] = flat.reshape(shape).astype(np.float64)

    net = build_network(cfg, seed)
    try:
        net.load_state(tensors)
    except NetworkShapeError as error:
        raise WeightFileError(error.message, context) from error
    return net


def read_weights(path: str | Path) -> CondNet:
    path = Path(path)
    if not path.is_file():
        raise InputFileNotFoundError(str(path), ErrorContext(operation="read_weights"))
    try:
        net = decode_weights(path.read_bytes(), str(path))
    except WeightFileError:
        raise
    except BaseError as error:
        raise WeightFileError(error.message, ErrorContext(path=str(path))) from error
    condnet_logger.debug(type="weights_read", path=str(path), msg=f"Weights read: {path}")
    return net
