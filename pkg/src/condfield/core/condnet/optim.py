"""Cross-entropy loss and the Adam update."""

from dataclasses import dataclass, field

import numpy as np

from condfield.core.condnet.layers import Tensor
from condfield.exceptions.custom_errors import (
    NetworkShapeError,
    NonFiniteGradientError,
    ValidationError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import AdamConfig

# Predictions are clamped to [BCE_EPSILON, 1 - BCE_EPSILON] before taking logs.
BCE_EPSILON = 1e-7


def _check_pair(pred: Tensor, target: Tensor) -> tuple[Tensor, Tensor]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise NetworkShapeError("bce_loss", target.shape, pred.shape)
    return pred, target


def bce_loss(pred: Tensor, target: Tensor) -> float:
    """Mean per-pixel binary cross-entropy against soft targets."""
    pred, target = _check_pair(pred, target)
    p = np.clip(pred, BCE_EPSILON, 1.0 - BCE_EPSILON)
    losses = -(target * np.log(p) + (1.0 - target) * np.log1p(-p))
    return float(losses.mean())


def bce_logit_gradient(pred: Tensor, target: Tensor) -> Tensor:
    """Gradient of :func:`bce_loss` w.r.t. the pre-sigmoid logits."""
    pred, target = _check_pair(pred, target)
    return (pred - target) / pred.size


@dataclass
class AdamState:
    """First and second moment estimates per parameter name."""

    m: dict[str, Tensor] = field(default_factory=dict)
    v: dict[str, Tensor] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, Tensor],
    state: AdamState,
    hyper: AdamConfig,
    t: int,
) -> tuple[dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    if t < 1:
        raise ValidationError(
            f"Adam step counter starts at 1, got {t}", context=ErrorContext(operation="adam_step")
        )
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(name, ErrorContext(operation="adam_step"))

    b1, b2 = hyper.beta1, hyper.beta2
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t
    new_params: dict[str, Tensor] = {}
    new_state = AdamState()
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value)
        elif grad.shape != value.shape:
            raise NetworkShapeError(name, value.shape, grad.shape)
        m = b1 * state.m.get(name, np.zeros_like(value)) + (1.0 - b1) * grad
        v = b2 * state.v.get(name, np.zeros_like(value)) + (1.0 - b2) * grad * grad
        step = hyper.step_size * (m / correction1) / (np.sqrt(v / correction2) + hyper.epsilon)
        new_params[name] = value - step
        new_state.m[name] = m
        new_state.v[name] = v
    return new_params, new_state
