"""Conductivity network: layers, training and volume inference."""

from condfield.core.condnet.inference import SlicePredictor, infer_volume, predict_direction
from condfield.core.condnet.network import CondNet, build_network, shape_ledger
from condfield.core.condnet.optim import AdamState, adam_step, bce_logit_gradient, bce_loss
from condfield.core.condnet.training import (
    ALL_AXES,
    train,
    train_all_directions,
    validation_count,
    write_loss_csv,
)
from condfield.core.condnet.weights_io import read_weights, write_weights

__all__ = [
    "ALL_AXES",
    "AdamState",
    "CondNet",
    "SlicePredictor",
    "adam_step",
    "bce_logit_gradient",
    "bce_loss",
    "build_network",
    "infer_volume",
    "predict_direction",
    "read_weights",
    "shape_ledger",
    "train",
    "train_all_directions",
    "validation_count",
    "write_loss_csv",
    "write_weights",
]
