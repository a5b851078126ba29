"""Layer primitives with hand-written backward passes.

Tensors are ``(batch, channels, height, width)`` float64 arrays. A layer keeps
the cache of its last training-mode forward call for ``backward``; inference
calls leave no state behind, so one network can serve several threads.
"""

from typing import Any

import numpy as np
import numpy.typing as npt
from numpy.lib.stride_tricks import sliding_window_view

from condfield.exceptions.custom_errors import NetworkShapeError

Tensor = npt.NDArray[np.float64]

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


def _require_4d(layer: str, x: Tensor, channels: int | None = None) -> None:
    if x.ndim != 4 or (channels is not None and x.shape[1] != channels):
        expected = f"(B, {channels if channels is not None else 'C'}, H, W)"
        raise NetworkShapeError(layer, expected, x.shape)


# Functional forms
def conv2d_same(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Stride-1 convolution (cross-correlation) with symmetric zero padding."""
    _require_4d("conv2d_same", x, w.shape[1])
    k = w.shape[2]
    if k % 2 == 0 or w.shape[3] != k:
        raise NetworkShapeError("conv2d_same", "odd square kernel", w.shape)
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))
    out = np.tensordot(windows, w, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b[None, :, None, None]
    return np.ascontiguousarray(out)


def conv2d_same_backward(
    x: Tensor, w: Tensor, grad: Tensor
) -> tuple[Tensor, Tensor, Tensor]:
    """Gradients of :func:`conv2d_same` w.r.t. input, weight and bias."""
    k = w.shape[2]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))
    grad_w = np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))
    grad_b = grad.sum(axis=(0, 2, 3))
    gp = np.pad(grad, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    g_windows = sliding_window_view(gp, (k, k), axis=(2, 3))
    flipped = w[:, :, ::-1, ::-1]
    grad_x = np.tensordot(g_windows, flipped, axes=([1, 4, 5], [0, 2, 3])).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(grad_x), grad_w, grad_b


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2."""
    _require_4d("maxpool2", x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise NetworkShapeError("maxpool2", "even spatial size", x.shape)
    return x.reshape(n, c, h // 2, 2, w // 2, 2).max(axis=(3, 5))


def maxpool2_backward(x: Tensor, grad: Tensor) -> Tensor:
    """Route each gradient to the first maximum of its window."""
    n, c, h, w = x.shape
    blocks = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = blocks.reshape(n, c, h // 2, w // 2, 4)
    winner = flat.argmax(axis=-1)
    routed = np.zeros_like(flat)
    np.put_along_axis(routed, winner[..., None], grad[..., None], axis=-1)
    routed = routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return routed.reshape(n, c, h, w)


def deconv2_stride2(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """2x2 transposed convolution with stride 2; weight is ``(in, out, 2, 2)``."""
    _require_4d("deconv2_stride2", x, w.shape[0])
    n, _, h, width = x.shape
    out = np.einsum("bchw,coij->bohiwj", x, w).reshape(n, w.shape[1], 2 * h, 2 * width)
    if b is not None:
        out = out + b[None, :, None, None]
    return out


def deconv2_stride2_backward(
    x: Tensor, w: Tensor, grad: Tensor
) -> tuple[Tensor, Tensor, Tensor]:
    n, _, h, width = x.shape
    g = grad.reshape(n, w.shape[1], h, 2, width, 2)
    grad_w = np.einsum("bchw,bohiwj->coij", x, g)
    grad_x = np.einsum("bohiwj,coij->bchw", g, w)
    return grad_x, grad_w, grad.sum(axis=(0, 2, 3))


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0.0)


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, evaluated without overflow for large |x|."""
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    e = np.exp(x[~positive])
    out[~positive] = e / (1.0 + e)
    return out


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
) -> tuple[Tensor, dict[str, Any]]:
    """Per-channel batch normalization.

    Training mode normalizes with batch statistics and returns them in the
    cache; inference mode uses the running statistics.
    """
    _require_4d("batchnorm", x, gamma.shape[0])
    if training:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + BN_EPSILON)
    xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    out = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    return out, {"xhat": xhat, "inv_std": inv_std, "mean": mean, "var": var}


def batchnorm_backward(
    grad: Tensor, gamma: Tensor, cache: dict[str, Any]
) -> tuple[Tensor, Tensor, Tensor]:
    """Gradients w.r.t. input, scale and shift for a training-mode forward."""
    xhat, inv_std = cache["xhat"], cache["inv_std"]
    m = grad.shape[0] * grad.shape[2] * grad.shape[3]
    grad_gamma = (grad * xhat).sum(axis=(0, 2, 3))
    grad_beta = grad.sum(axis=(0, 2, 3))
    dxhat = grad * gamma[None, :, None, None]
    grad_x = (
        inv_std[None, :, None, None]
        / m
        * (
            m * dxhat
            - dxhat.sum(axis=(0, 2, 3))[None, :, None, None]
            - xhat * (dxhat * xhat).sum(axis=(0, 2, 3))[None, :, None, None]
        )
    )
    return grad_x, grad_gamma, grad_beta


# Stateful layers
class Layer:
    """Parameters, their gradients and the cache of the last training forward."""

    def __init__(self) -> None:
        self.params: dict[str, Tensor] = {}
        self.grads: dict[str, Tensor] = {}
        self.buffers: dict[str, Tensor] = {}
        self._cache: Any = None

    def zero_grad(self) -> None:
        self.grads = {name: np.zeros_like(p) for name, p in self.params.items()}

    def _accumulate(self, name: str, grad: Tensor) -> None:
        if name in self.grads:
            self.grads[name] = self.grads[name] + grad
        else:
            self.grads[name] = grad

    def _cached(self) -> Any:
        if self._cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called without a training forward")
        return self._cache


def _fan_in_uniform(
    rng: np.random.Generator, shape: tuple[int, ...], fan_in: int
) -> Tensor:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv2d(Layer):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng: np.random.Generator) -> None:
        super().__init__()
        self.params["weight"] = _fan_in_uniform(
            rng, (out_ch, in_ch, kernel, kernel), in_ch * kernel * kernel
        )
        self.params["bias"] = np.zeros(out_ch)

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if training:
            self._cache = x
        return conv2d_same(x, self.params["weight"], self.params["bias"])

    def backward(self, grad: Tensor) -> Tensor:
        grad_x, grad_w, grad_b = conv2d_same_backward(self._cached(), self.params["weight"], grad)
        self._accumulate("weight", grad_w)
        self._accumulate("bias", grad_b)
        return grad_x


class Deconv2x2(Layer):
    def __init__(self, in_ch: int, out_ch: int, rng: np.random.Generator) -> None:
        super().__init__()
        self.params["weight"] = _fan_in_uniform(rng, (in_ch, out_ch, 2, 2), in_ch)
        self.params["bias"] = np.zeros(out_ch)

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if training:
            self._cache = x
        return deconv2_stride2(x, self.params["weight"], self.params["bias"])

    def backward(self, grad: Tensor) -> Tensor:
        grad_x, grad_w, grad_b = deconv2_stride2_backward(
            self._cached(), self.params["weight"], grad
        )
        self._accumulate("weight", grad_w)
        self._accumulate("bias", grad_b)
        return grad_x


class BatchNormReLU(Layer):
    """Batch normalization followed by ReLU."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        normed, cache = batchnorm(
            x,
            self.params["gamma"],
            self.params["beta"],
            self.buffers["running_mean"],
            self.buffers["running_var"],
            training,
        )
        out = relu(normed)
        if training:
            self._cache = (cache, normed > 0.0)
            self.buffers["running_mean"] = (
                BN_MOMENTUM * self.buffers["running_mean"] + (1.0 - BN_MOMENTUM) * cache["mean"]
            )
            self.buffers["running_var"] = (
                BN_MOMENTUM * self.buffers["running_var"] + (1.0 - BN_MOMENTUM) * cache["var"]
            )
        return out

    def backward(self, grad: Tensor) -> Tensor:
        cache, passed = self._cached()
        grad_x, grad_gamma, grad_beta = batchnorm_backward(
            grad * passed, self.params["gamma"], cache
        )
        self._accumulate("gamma", grad_gamma)
        self._accumulate("beta", grad_beta)
        return grad_x


class MaxPool2(Layer):
    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if training:
            self._cache = x
        return maxpool2(x)

    def backward(self, grad: Tensor) -> Tensor:
        return maxpool2_backward(self._cached(), grad)
