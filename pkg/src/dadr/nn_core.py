"""Differentiable building blocks: instance norm, AdaIN, pooling, the style
MLP, and spec-driven network assembly with shape checking.

Everything here is a pure function of its inputs and parameters; parameter
initialization is seeded explicitly so whole-model builds are reproducible.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import torch
from torch import Tensor, nn

from .errors import ConfigError, NonFiniteError

DEFAULT_EPS = 1e-5

_KINDS = {"conv", "residual", "upsample", "downsample", "instance-norm", "adain", "pool", "dense"}
_NORMS = {"none", "in", "adain"}
_ACTIVATIONS = {"none", "relu", "tanh"}


def _check_feature_map(x: Tensor) -> None:
    if x.ndim != 4:
        raise ConfigError(f"expected 4-D (batch, channels, h, w) feature map, got shape {tuple(x.shape)}")
    if min(x.shape) < 1:
        raise ConfigError(f"all feature map dimensions must be >= 1, got {tuple(x.shape)}")


def instance_norm(x: Tensor, eps: float = DEFAULT_EPS) -> Tensor:
    """Normalize each (sample, channel) plane to zero mean and unit std.

    The denominator is the population std floored at eps, so zero-variance
    planes map to zero instead of NaN and gradients stay finite.
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    _check_feature_map(x)
    if not torch.isfinite(x).all():
        raise NonFiniteError("non-finite values entering instance_norm")
    mean = x.mean(dim=(2, 3), keepdim=True)
    var = x.var(dim=(2, 3), keepdim=True, unbiased=False)
    return (x - mean) / torch.sqrt(var.clamp_min(eps * eps))


@dataclass
class AffineParams:
    """Per-channel scale and shift; vectors of length C, or (batch, C)."""

    gamma: Tensor
    beta: Tensor

    def __post_init__(self):
        if self.gamma.shape != self.beta.shape:
            raise ConfigError(f"gamma shape {tuple(self.gamma.shape)} != beta shape {tuple(self.beta.shape)}")
        if self.gamma.ndim not in (1, 2):
            raise ConfigError(f"affine params must be 1-D or 2-D, got {self.gamma.ndim}-D")

    @property
    def channels(self) -> int:
        return self.gamma.shape[-1]


def adain(x: Tensor, params: AffineParams, eps: float = DEFAULT_EPS) -> Tensor:
    """Instance-normalize x, then scale by gamma and shift by beta per channel."""
    _check_feature_map(x)
    if params.channels != x.shape[1]:
        raise ConfigError(f"affine params for {params.channels} channels, feature map has {x.shape[1]}")
    gamma, beta = params.gamma, params.beta
    if gamma.ndim == 2 and gamma.shape[0] != x.shape[0]:
        raise ConfigError(f"affine params batch {gamma.shape[0]} != feature map batch {x.shape[0]}")
    shape = (1, -1, 1, 1) if gamma.ndim == 1 else (x.shape[0], -1, 1, 1)
    return gamma.reshape(shape) * instance_norm(x, eps) + beta.reshape(shape)


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over spatial positions; (B, C, H, W) -> (B, C)."""
    _check_feature_map(x)
    return x.mean(dim=(2, 3))


class StyleMLP(nn.Module):
    """Maps a style code to one (gamma, beta) pair per AdaIN layer.

    `layout` gives the channel count of each AdaIN layer in consumption order.
    """

    def __init__(self, style_dim: int, layout: Sequence[int], hidden_dim: int = 64, n_hidden: int = 2):
        super().__init__()
        if style_dim < 1:
            raise ConfigError(f"style_dim must be >= 1, got {style_dim}")
        if not layout or any(c < 1 for c in layout):
            raise ConfigError(f"layout must be non-empty positive channel counts, got {layout}")
        self.style_dim = style_dim
        self.layout = tuple(int(c) for c in layout)
        dims = [style_dim] + [hidden_dim] * n_hidden + [2 * sum(self.layout)]
        layers: list[nn.Module] = []
        for i in range(len(dims) - 1):
            layers.append(nn.Linear(dims[i], dims[i + 1]))
            if i < len(dims) - 2:
                layers.append(nn.ReLU())
        self.net = nn.Sequential(*layers)

    def forward(self, style: Tensor) -> list[AffineParams]:
        if style.ndim != 2 or style.shape[1] != self.style_dim:
            raise ConfigError(
                f"style code must be (batch, {self.style_dim}), got shape {tuple(style.shape)}"
            )
        flat = self.net(style)
        params = []
        offset = 0
        for c in self.layout:
            params.append(AffineParams(flat[:, offset : offset + c], flat[:, offset + c : offset + 2 * c]))
            offset += 2 * c
        return params


# ---------------------------------------------------------------------------
# Layer specs and shape propagation


@dataclass(frozen=True)
class LayerSpec:
    """One layer in a network chain; composing specs is shape-checked."""

    kind: str
    channels_in: int = 0
    channels_out: int = 0
    kernel: int = 3
    stride: int = 1
    padding: int = 0
    norm: str = "none"
    activation: str = "none"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.norm not in _NORMS:
            raise ConfigError(f"unknown norm {self.norm!r}")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.kind in ("conv", "downsample", "upsample", "residual", "dense"):
            if self.channels_in < 1 or self.channels_out < 1:
                raise ConfigError(f"{self.kind} needs positive channel counts, got {self.channels_in}->{self.channels_out}")
        if self.kind in ("conv", "downsample", "upsample", "residual"):
            if self.kernel < 1 or self.stride < 1 or self.padding < 0:
                raise ConfigError(f"bad kernel/stride/padding on {self.kind}: {self.kernel}/{self.stride}/{self.padding}")
        if self.kind == "residual" and self.channels_in != self.channels_out:
            raise ConfigError("residual blocks preserve channel count")
        if self.norm == "adain" and self.kind not in ("residual", "adain"):
            raise ConfigError(f"adain norm not supported on kind {self.kind!r}")

    # -- convenience constructors ------------------------------------------

    @classmethod
    def conv(cls, cin: int, cout: int, kernel: int = 3, stride: int = 1, padding: int = 1,
             norm: str = "none", activation: str = "none") -> "LayerSpec":
        return cls("conv", cin, cout, kernel, stride, padding, norm, activation)

    @classmethod
    def downsample(cls, cin: int, cout: int, norm: str = "none", activation: str = "relu") -> "LayerSpec":
        return cls("downsample", cin, cout, kernel=4, stride=2, padding=1, norm=norm, activation=activation)

    @classmethod
    def upsample(cls, cin: int, cout: int, kernel: int = 3, norm: str = "none",
                 activation: str = "relu") -> "LayerSpec":
        return cls("upsample", cin, cout, kernel=kernel, stride=1, padding=(kernel - 1) // 2,
                   norm=norm, activation=activation)

    @classmethod
    def residual(cls, channels: int, norm: str = "in") -> "LayerSpec":
        return cls("residual", channels, channels, kernel=3, stride=1, padding=1, norm=norm)

    @classmethod
    def instance_norm(cls, channels: int) -> "LayerSpec":
        return cls("instance-norm", channels, channels)

    @classmethod
    def adain(cls, channels: int) -> "LayerSpec":
        return cls("adain", channels, channels, norm="adain")

    @classmethod
    def pool(cls) -> "LayerSpec":
        return cls("pool")

    @classmethod
    def dense(cls, fin: int, fout: int, activation: str = "none") -> "LayerSpec":
        return cls("dense", fin, fout, activation=activation)


def _conv_out(size: int, kernel: int, stride: int, padding: int) -> int:
    out = (size + 2 * padding - kernel) // stride + 1
    if out < 1:
        raise ConfigError(f"conv collapses spatial size {size} below 1 (k={kernel}, s={stride}, p={padding})")
    return out


def _layer_output_shape(spec: LayerSpec, shape: tuple, index: int) -> tuple:
    def fail(msg: str):
        raise ConfigError(f"layer {index} ({spec.kind}): {msg}")

    if spec.kind in ("conv", "downsample", "upsample", "residual", "instance-norm", "adain"):
        if len(shape) != 3:
            fail(f"needs (channels, h, w) input, got {shape}")
        c, h, w = shape
        if spec.channels_in and c != spec.channels_in:
            fail(f"expects {spec.channels_in} input channels, chain provides {c}")
        if spec.kind in ("instance-norm", "adain", "residual"):
            return (c, h, w)
        if spec.kind == "upsample":
            h, w = 2 * h, 2 * w
        return (spec.channels_out, _conv_out(h, spec.kernel, spec.stride, spec.padding),
                _conv_out(w, spec.kernel, spec.stride, spec.padding))
    if spec.kind == "pool":
        if len(shape) != 3:
            fail(f"needs (channels, h, w) input, got {shape}")
        return (shape[0],)
    if spec.kind == "dense":
        if len(shape) != 1:
            fail(f"needs a flat feature input (pool first), got {shape}")
        if shape[0] != spec.channels_in:
            fail(f"expects {spec.channels_in} input features, chain provides {shape[0]}")
        return (spec.channels_out,)
    fail("unreachable kind")


def chain_output_shape(specs: Iterable[LayerSpec], input_shape: Sequence[int]) -> tuple:
    """Propagate a per-sample shape through a spec chain, or raise ConfigError."""
    shape = tuple(input_shape)
    for i, spec in enumerate(specs):
        shape = _layer_output_shape(spec, shape, i)
    return shape


# ---------------------------------------------------------------------------
# Torch modules realizing the specs


def _activation(name: str) -> nn.Module:
    return {"none": nn.Identity(), "relu": nn.ReLU(), "tanh": nn.Tanh()}[name]


class ConvLayer(nn.Module):
    def __init__(self, spec: LayerSpec):
        super().__init__()
        stride = spec.stride
        self.pre_upsample = spec.kind == "upsample"
        self.conv = nn.Conv2d(spec.channels_in, spec.channels_out, spec.kernel, stride, spec.padding)
        self.norm_eps = DEFAULT_EPS if spec.norm == "in" else None
        self.act = _activation(spec.activation)

    def forward(self, x: Tensor) -> Tensor:
        if self.pre_upsample:
            x = nn.functional.interpolate(x, scale_factor=2, mode="nearest")
        x = self.conv(x)
        if self.norm_eps is not None:
            x = instance_norm(x, self.norm_eps)
        return self.act(x)


class ResidualBlock(nn.Module):
    """Two 3x3 convs with instance norm (or none); identity skip."""

    def __init__(self, spec: LayerSpec):
        super().__init__()
        c = spec.channels_in
        self.conv1 = nn.Conv2d(c, c, spec.kernel, 1, spec.padding)
        self.conv2 = nn.Conv2d(c, c, spec.kernel, 1, spec.padding)
        self.use_norm = spec.norm == "in"

    def forward(self, x: Tensor) -> Tensor:
        h = self.conv1(x)
        if self.use_norm:
            h = instance_norm(h)
        h = torch.relu(h)
        h = self.conv2(h)
        if self.use_norm:
            h = instance_norm(h)
        return x + h


class AdainResidualBlock(nn.Module):
    """Residual block whose two norms take style-driven affine params."""

    def __init__(self, spec: LayerSpec):
        super().__init__()
        c = spec.channels_in
        self.conv1 = nn.Conv2d(c, c, spec.kernel, 1, spec.padding)
        self.conv2 = nn.Conv2d(c, c, spec.kernel, 1, spec.padding)

    def forward(self, x: Tensor, p1: AffineParams, p2: AffineParams) -> Tensor:
        h = torch.relu(adain(self.conv1(x), p1))
        h = adain(self.conv2(h), p2)
        return x + h


class AdainLayer(nn.Module):
    def __init__(self, spec: LayerSpec):
        super().__init__()
        self.channels = spec.channels_in

    def forward(self, x: Tensor, params: AffineParams) -> Tensor:
        return adain(x, params)


class InstanceNormLayer(nn.Module):
    def forward(self, x: Tensor) -> Tensor:
        return instance_norm(x)


class GlobalAvgPool(nn.Module):
    def forward(self, x: Tensor) -> Tensor:
        return global_avg_pool(x)


class DenseLayer(nn.Module):
    def __init__(self, spec: LayerSpec):
        super().__init__()
        self.linear = nn.Linear(spec.channels_in, spec.channels_out)
        self.act = _activation(spec.activation)

    def forward(self, x: Tensor) -> Tensor:
        return self.act(self.linear(x))


def _build_layer(spec: LayerSpec) -> nn.Module:
    if spec.kind in ("conv", "downsample", "upsample"):
        return ConvLayer(spec)
    if spec.kind == "residual":
        return AdainResidualBlock(spec) if spec.norm == "adain" else ResidualBlock(spec)
    if spec.kind == "adain":
        return AdainLayer(spec)
    if spec.kind == "instance-norm":
        return InstanceNormLayer()
    if spec.kind == "pool":
        return GlobalAvgPool()
    if spec.kind == "dense":
        return DenseLayer(spec)
    raise ConfigError(f"unknown layer kind {spec.kind!r}")


def adain_layout(specs: Iterable[LayerSpec]) -> list[int]:
    """Channel counts of AdaIN layers in consumption order (residual blocks use two)."""
    layout = []
    for spec in specs:
        if spec.kind == "adain":
            layout.append(spec.channels_in)
        elif spec.kind == "residual" and spec.norm == "adain":
            layout += [spec.channels_in, spec.channels_in]
    return layout


def init_parameters(module: nn.Module, generator: torch.Generator) -> None:
    """Fan-in-scaled uniform init for every conv/linear, drawn from `generator`."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.Linear)):
            fan_in = m.weight[0].numel()
            bound = 1.0 / math.sqrt(fan_in)
            with torch.no_grad():
                m.weight.uniform_(-bound, bound, generator=generator)
                if m.bias is not None:
                    m.bias.uniform_(-bound, bound, generator=generator)


class SpecNet(nn.Module):
    """Network assembled from a LayerSpec chain.

    Shapes are validated at construction time; AdaIN layers consume affine
    params (from a StyleMLP) in chain order at forward time.
    """

    def __init__(self, specs: Sequence[LayerSpec], input_shape: Sequence[int],
                 generator: torch.Generator | None = None, strict_input: bool = True):
        super().__init__()
        self.specs = tuple(specs)
        self.input_shape = tuple(input_shape)
        self.strict_input = strict_input
        self.output_shape = chain_output_shape(self.specs, self.input_shape)
        self.layers = nn.ModuleList(_build_layer(s) for s in self.specs)
        if generator is not None:
            init_parameters(self, generator)

    def adain_layout(self) -> list[int]:
        return adain_layout(self.specs)

    def forward(self, x: Tensor, affine_params: Sequence[AffineParams] | None = None) -> Tensor:
        if self.strict_input:
            if tuple(x.shape[1:]) != self.input_shape:
                raise ConfigError(
                    f"input shape {tuple(x.shape[1:])} does not match configured {self.input_shape}"
                )
        elif x.shape[1] != self.input_shape[0]:
            raise ConfigError(
                f"input has {x.shape[1]} channels, chain expects {self.input_shape[0]}"
            )
        queue = list(affine_params) if affine_params is not None else []
        needed = len(self.adain_layout())
        if len(queue) != needed:
            raise ConfigError(f"chain has {needed} AdaIN norms, got {len(queue)} affine params")
        pos = 0
        for spec, layer in zip(self.specs, self.layers):
            if spec.kind == "adain":
                x = layer(x, queue[pos])
                pos += 1
            elif spec.kind == "residual" and spec.norm == "adain":
                x = layer(x, queue[pos], queue[pos + 1])
                pos += 2
            else:
                x = layer(x)
        return x
