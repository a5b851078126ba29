"""Multi-encoder, multi-decoder slice network.

Each of the ``U`` encoders reads one normalized MRI slice. Encoder level
``i = 1 .. I-1`` convolves to ``2^(i+1)`` channels at ``2^(p+1-i)`` pixels
and max-pools to ``2^(p-i)``. The pooled outputs of the last level are
stacked into the hub. Each of the ``V`` decoders walks back up: a
convolution block, a concatenation with the encoder features of the same
resolution (all but the deepest level), and a 2x2 stride-2 deconvolution.
A final convolution to one channel followed by the logistic sigmoid gives
a normalized conductor slice.
"""

from collections.abc import Iterator

import numpy as np

from condfield.core.condnet.layers import (
    BatchNormReLU,
    Conv2d,
    Deconv2x2,
    Layer,
    MaxPool2,
    Tensor,
    sigmoid,
)
from condfield.exceptions.custom_errors import (
    NetworkConfigError,
    NetworkShapeError,
    NonFiniteValueError,
)
from condfield.exceptions.types import ErrorContext
from condfield.models.types import NetConfig
from condfield.services import condnet_logger

Shape = tuple[int, int, int]


def shape_ledger(cfg: NetConfig) -> dict[str, Shape]:
    """Per-sample ``(channels, height, width)`` of every module output."""
    u_count, depth, p = cfg.encoders, cfg.depth, cfg.size_power
    ledger: dict[str, Shape] = {}
    for u in range(u_count):
        for i in range(1, depth):
            ledger[f"EncMod[{u}][{i}]"] = (2 ** (i + 1), 2 ** (p + 1 - i), 2 ** (p + 1 - i))
            ledger[f"EncMod[{u}][{i}].pool"] = (2 ** (i + 1), 2 ** (p - i), 2 ** (p - i))
    ledger["Hub"] = (u_count * 2**depth, 2 ** (p + 1 - depth), 2 ** (p + 1 - depth))
    for v in range(cfg.decoders):
        for i in range(depth - 1, 0, -1):
            ledger[f"CnvMod[{v}][{i}]"] = (2 ** (i + 2), 2 ** (p - i), 2 ** (p - i))
            if i <= depth - 2:
                ledger[f"Concat[{v}][{i}]"] = (
                    (u_count + 1) * 2 ** (i + 2),
                    2 ** (p - i),
                    2 ** (p - i),
                )
            ledger[f"DecMod[{v}][{i}]"] = (2 ** (i + 1), 2 ** (p + 1 - i), 2 ** (p + 1 - i))
        ledger[f"Map[{v}]"] = (1, 2**p, 2**p)
    return ledger


class EncoderLevel:
    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng: np.random.Generator) -> None:
        self.conv = Conv2d(in_ch, out_ch, kernel, rng)
        self.act = BatchNormReLU(out_ch)
        self.pool = MaxPool2()

    def forward(self, x: Tensor, training: bool) -> tuple[Tensor, Tensor]:
        """Pre-pool feature and pooled output."""
        feature = self.act.forward(self.conv.forward(x, training), training)
        return feature, self.pool.forward(feature, training)

    def backward(self, grad_pooled: Tensor, grad_feature: Tensor | None) -> Tensor:
        grad = self.pool.backward(grad_pooled)
        if grad_feature is not None:
            grad = grad + grad_feature
        return self.conv.backward(self.act.backward(grad))


class DecoderLevel:
    def __init__(
        self,
        in_ch: int,
        cnv_ch: int,
        concat_ch: int,
        out_ch: int,
        kernel: int,
        rng: np.random.Generator,
    ) -> None:
        self.cnv = Conv2d(in_ch, cnv_ch, kernel, rng)
        self.cnv_act = BatchNormReLU(cnv_ch)
        self.deconv = Deconv2x2(concat_ch, out_ch, rng)
        self.deconv_act = BatchNormReLU(out_ch)


class CondNet:
    """Parameters and forward/backward passes of one slicing direction."""

    def __init__(self, cfg: NetConfig, seed: int = 0) -> None:
        errors = cfg.ledger_errors()
        if errors:
            raise NetworkConfigError(
                "; ".join(errors), ErrorContext(operation="build_network", component="condnet")
            )
        self.cfg = cfg
        self.seed = seed
        self.ledger = shape_ledger(cfg)
        rng = np.random.default_rng(seed)
        depth, u_count = cfg.depth, cfg.encoders

        self.encoders: list[list[EncoderLevel]] = []
        for u in range(u_count):
            levels = []
            for i in range(1, depth):
                in_ch = 1 if i == 1 else 2**i
                kernel = cfg.encoder_kernels[u][i - 1]
                levels.append(EncoderLevel(in_ch, 2 ** (i + 1), kernel, rng))
            self.encoders.append(levels)

        # decoder levels are stored shallowest first: index i - 1
        self.decoders: list[list[DecoderLevel]] = []
        self.maps: list[Conv2d] = []
        for v in range(cfg.decoders):
            levels_by_depth: dict[int, DecoderLevel] = {}
            for i in range(depth - 1, 0, -1):
                in_ch = u_count * 2**depth if i == depth - 1 else 2 ** (i + 2)
                cnv_ch = 2 ** (i + 2)
                concat_ch = (u_count + 1) * cnv_ch if i <= depth - 2 else cnv_ch
                levels_by_depth[i] = DecoderLevel(
                    in_ch, cnv_ch, concat_ch, 2 ** (i + 1), cfg.decoder_kernels[v][i - 1], rng
                )
            self.decoders.append([levels_by_depth[i] for i in range(1, depth)])
            self.maps.append(Conv2d(4, 1, cfg.map_kernels[v], rng))

        condnet_logger.debug(
            type="network_built",
            encoders=u_count,
            decoders=cfg.decoders,
            depth=depth,
            slice_size=cfg.slice_size,
            parameters=self.parameter_count,
            msg=f"CondNet built with {self.parameter_count} parameters",
        )

    # Parameter access
    def named_layers(self) -> Iterator[tuple[str, Layer]]:
        for u, levels in enumerate(self.encoders):
            for i, enc in enumerate(levels, start=1):
                yield f"enc{u}.level{i}.conv", enc.conv
                yield f"enc{u}.level{i}.bn", enc.act
        for v, levels in enumerate(self.decoders):
            for i, dec in enumerate(levels, start=1):
                yield f"dec{v}.level{i}.cnv", dec.cnv
                yield f"dec{v}.level{i}.cnv_bn", dec.cnv_act
                yield f"dec{v}.level{i}.deconv", dec.deconv
                yield f"dec{v}.level{i}.deconv_bn", dec.deconv_act
            yield f"dec{v}.map", self.maps[v]

    def parameters(self) -> dict[str, Tensor]:
        return {
            f"{prefix}.{name}": value
            for prefix, layer in self.named_layers()
            for name, value in layer.params.items()
        }

    def gradients(self) -> dict[str, Tensor]:
        return {
            f"{prefix}.{name}": layer.grads.get(name, np.zeros_like(value))
            for prefix, layer in self.named_layers()
            for name, value in layer.params.items()
        }

    def buffers(self) -> dict[str, Tensor]:
        return {
            f"{prefix}.{name}": value
            for prefix, layer in self.named_layers()
            for name, value in layer.buffers.items()
        }

    @property
    def parameter_count(self) -> int:
        return sum(int(p.size) for p in self.parameters().values())

    def load_state(self, values: dict[str, Tensor], strict: bool = True) -> None:
        """Replace parameters and buffers by name, checking shapes."""
        known: set[str] = set()
        for prefix, layer in self.named_layers():
            for store in (layer.params, layer.buffers):
                for name, current in list(store.items()):
                    key = f"{prefix}.{name}"
                    known.add(key)
                    if key not in values:
                        if strict:
                            raise NetworkShapeError(key, current.shape, "missing")
                        continue
                    new = np.asarray(values[key], dtype=np.float64)
                    if new.shape != current.shape:
                        raise NetworkShapeError(key, current.shape, new.shape)
                    store[name] = np.array(new)
        extra = sorted(set(values) - known)
        if extra and strict:
            raise NetworkShapeError(extra[0], "no such tensor", "present")

    def zero_grad(self) -> None:
        for _, layer in self.named_layers():
            layer.zero_grad()

    # Passes
    def _check(self, name: str, x: Tensor) -> None:
        if x.shape[1:] != self.ledger[name]:
            raise NetworkShapeError(name, self.ledger[name], x.shape[1:])

    def _check_input(self, x: Tensor) -> None:
        n = self.cfg.slice_size
        expected = (self.cfg.encoders, n, n)
        if x.ndim != 4 or x.shape[1:] != expected:
            raise NetworkShapeError("input", f"(B, {expected[0]}, {n}, {n})", x.shape)
        if not np.all(np.isfinite(x)):
            raise NonFiniteValueError("network input", ErrorContext(operation="forward"))

    def forward_logits(self, x: Tensor, training: bool = False) -> Tensor:
        """Pre-sigmoid outputs ``(B, V, N, N)`` for inputs ``(B, U, N, N)``."""
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        depth = self.cfg.depth

        features: list[list[Tensor]] = []
        pooled: list[Tensor] = []
        for u, levels in enumerate(self.encoders):
            h = x[:, u : u + 1]
            kept = []
            for i, enc in enumerate(levels, start=1):
                feature, h = enc.forward(h, training)
                self._check(f"EncMod[{u}][{i}]", feature)
                self._check(f"EncMod[{u}][{i}].pool", h)
                kept.append(feature)
            features.append(kept)
            pooled.append(h)
        hub = np.concatenate(pooled, axis=1)
        self._check("Hub", hub)

        outputs = []
        for v, levels in enumerate(self.decoders):
            h = hub
            for i in range(depth - 1, 0, -1):
                dec = levels[i - 1]
                h = dec.cnv_act.forward(dec.cnv.forward(h, training), training)
                self._check(f"CnvMod[{v}][{i}]", h)
                if i <= depth - 2:
                    h = np.concatenate([h] + [f[i] for f in features], axis=1)
                    self._check(f"Concat[{v}][{i}]", h)
                h = dec.deconv_act.forward(dec.deconv.forward(h, training), training)
                self._check(f"DecMod[{v}][{i}]", h)
            logits = self.maps[v].forward(h, training)
            self._check(f"Map[{v}]", logits)
            outputs.append(logits)
        return np.concatenate(outputs, axis=1)

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        """Normalized conductor slices ``(B, V, N, N)`` in (0, 1)."""
        return sigmoid(self.forward_logits(x, training))

    def predict(self, slices: Tensor) -> Tensor:
        return self.forward(slices, training=False)

    def backward(self, grad_logits: Tensor) -> None:
        """Accumulate parameter gradients from ``dL/dlogits`` of the last training forward."""
        depth, u_count = self.cfg.depth, self.cfg.encoders
        hub_grad: Tensor | None = None
        skip_grads: dict[tuple[int, int], Tensor] = {}

        for v, levels in enumerate(self.decoders):
            grad = self.maps[v].backward(grad_logits[:, v : v + 1])
            for i in range(1, depth):
                dec = levels[i - 1]
                grad = dec.deconv.backward(dec.deconv_act.backward(grad))
                if i <= depth - 2:
                    width = 2 ** (i + 2)
                    for u in range(u_count):
                        part = grad[:, (u + 1) * width : (u + 2) * width]
                        key = (u, i + 1)
                        skip_grads[key] = skip_grads[key] + part if key in skip_grads else part
                    grad = grad[:, :width]
                grad = dec.cnv.backward(dec.cnv_act.backward(grad))
            hub_grad = grad if hub_grad is None else hub_grad + grad

        assert hub_grad is not None
        width = 2**depth
        for u, levels in enumerate(self.encoders):
            grad = hub_grad[:, u * width : (u + 1) * width]
            for i in range(depth - 1, 0, -1):
                grad = levels[i - 1].backward(grad, skip_grads.get((u, i)))


def build_network(cfg: NetConfig, seed: int = 0) -> CondNet:
    """Allocate a network with seeded fan-in uniform weights."""
    return CondNet(cfg, seed)
