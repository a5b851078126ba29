"""Slice-wise training of one network per slicing direction."""

from pathlib import Path

import numpy as np

from condfield.core.condnet.layers import Tensor, sigmoid
from condfield.core.condnet.network import CondNet, build_network
from condfield.core.condnet.optim import AdamState, adam_step, bce_logit_gradient, bce_loss
from condfield.core.grid import volume_planes
from condfield.core.phantom import TrainingSet
from condfield.exceptions.custom_errors import (
    NetworkConfigError,
    NetworkShapeError,
    TooFewSlicesError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import Axis, LossCurve, NetConfig, TrainConfig
from condfield.services import PerformanceLogger, condnet_logger, log_training_epoch

ALL_AXES = (Axis.AXIAL, Axis.SAGITTAL, Axis.CORONAL)


def training_slices(cfg: NetConfig, data: TrainingSet, axis: Axis | str) -> tuple[Tensor, Tensor]:
    """Inputs ``(S, U, N, N)`` and targets ``(S, V, N, N)`` of every plane along ``axis``."""
    axis = Axis(axis)
    context = ErrorContext(operation="train", component="condnet", axis=axis.value)
    if not data.samples:
        raise TooFewSlicesError(0, 0, context)
    inputs, targets = [], []
    for sample in data.samples:
        if len(sample.inputs) != cfg.encoders or len(sample.targets) != cfg.decoders:
            raise NetworkConfigError(
                f"Network has {cfg.encoders} encoder(s) and {cfg.decoders} decoder(s), sample "
                f"has {len(sample.inputs)} input(s) and {len(sample.targets)} target(s)",
                context,
            )
        inputs.append(np.stack([volume_planes(g, axis) for g in sample.inputs], axis=1))
        targets.append(np.stack([volume_planes(g, axis) for g in sample.targets], axis=1))
    x = np.concatenate(inputs, axis=0)
    y = np.concatenate(targets, axis=0)
    n = cfg.slice_size
    if x.shape[2:] != (n, n):
        raise NetworkShapeError("input", (n, n), x.shape[2:], context)
    return x, y


def validation_count(total: int, fraction: float) -> int:
    """Number of held-out slices, rounded half up."""
    return int(np.floor(total * fraction + 0.5))


def split_slices(
    total: int, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Shuffled training and validation indices."""
    held_out = validation_count(total, fraction)
    if held_out < 1 or total - held_out < 1:
        raise TooFewSlicesError(total, held_out, ErrorContext(operation="split_slices"))
    order = rng.permutation(total)
    return order[held_out:], order[:held_out]


def _batches(indices: np.ndarray, size: int) -> list[np.ndarray]:
    return [indices[start : start + size] for start in range(0, len(indices), size)]


def evaluate_loss(net: CondNet, x: Tensor, y: Tensor, batch_size: int) -> float:
    """Slice-weighted mean loss in inference mode."""
    total = 0.0
    for batch in _batches(np.arange(len(x)), batch_size):
        total += bce_loss(net.forward(x[batch]), y[batch]) * len(batch)
    return total / len(x)


def train(
    cfg: NetConfig, tcfg: TrainConfig, data: TrainingSet, axis: Axis | str
) -> tuple[CondNet, LossCurve]:
    """Train one network on all planes along ``axis``; returns it after the last epoch."""
    axis = Axis(axis)
    x, y = training_slices(cfg, data, axis)
    rng = np.random.default_rng([tcfg.seed, 1])
    train_idx, val_idx = split_slices(len(x), tcfg.validation_fraction, rng)

    net = build_network(cfg, tcfg.seed)
    state = AdamState.zeros_like(net.parameters())
    curve = LossCurve(train_slices=len(train_idx), validation_slices=len(val_idx))
    perf = PerformanceLogger(condnet_logger, f"train_{axis.value}")
    condnet_logger.info(
        type="training_start",
        axis=axis.value,
        train_slices=len(train_idx),
        validation_slices=len(val_idx),
        epochs=tcfg.epochs,
        msg=f"Training {axis.value} network on {len(train_idx)} slices",
    )

    step = 0
    for epoch in range(1, tcfg.epochs + 1):
        running = 0.0
        for batch in _batches(rng.permutation(train_idx), tcfg.batch_size):
            xb, yb = x[batch], y[batch]
            pred = sigmoid(net.forward_logits(xb, training=True))
            running += bce_loss(pred, yb) * len(batch)
            net.zero_grad()
            net.backward(bce_logit_gradient(pred, yb))
            step += 1
            params, state = adam_step(net.parameters(), net.gradients(), state, tcfg.adam, step)
            net.load_state(params, strict=False)
        train_loss = running / len(train_idx)
        validation_loss = evaluate_loss(net, x[val_idx], y[val_idx], tcfg.batch_size)
        curve.train.append(train_loss)
        curve.validation.append(validation_loss)
        log_training_epoch(epoch, train_loss, validation_loss, {"axis": axis.value})

    perf.finish(
        additional_data={
            "axis": axis.value,
            "final_train_loss": curve.train[-1],
            "final_validation_loss": curve.validation[-1],
        }
    )
    return net, curve


def train_all_directions(
    cfg: NetConfig, tcfg: TrainConfig, data: TrainingSet
) -> dict[Axis, tuple[CondNet, LossCurve]]:
    """One network per slicing direction, each trained with the same protocol."""
    return {axis: train(cfg, tcfg, data, axis) for axis in ALL_AXES}


def format_loss_csv(curve: LossCurve) -> str:
    lines = ["epoch,train_loss,validation_loss"]
    for epoch, (t, v) in enumerate(zip(curve.train, curve.validation, strict=True), start=1):
        lines.append(f"{epoch},{t:.8f},{v:.8f}")
    return "\n".join(lines) + "\n"


def write_loss_csv(curve: LossCurve, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_loss_csv(curve), encoding="ascii")
    return path
