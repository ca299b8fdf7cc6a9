"""Typed carriers for the disentangled representation model."""

from dataclasses import dataclass, field

import torch
from torch import Tensor

from ..errors import ConfigError, NonFiniteError

PIXEL_TOL = 1e-5


@dataclass
class ImageBatch:
    """Batch of single-channel images in [-1, 1] with a domain tag."""

    pixels: Tensor
    domain: int
    scene_ids: list[int] | None = None

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 4 or p.shape[1] != 1:
            raise ConfigError(f"pixels must be (batch, 1, h, w), got {tuple(p.shape)}")
        h, w = p.shape[2], p.shape[3]
        if h != w or h < 8 or (h & (h - 1)):
            raise ConfigError(f"images must be square with power-of-two side >= 8, got {h}x{w}")
        if self.domain not in (1, 2):
            raise ConfigError(f"domain must be 1 or 2, got {self.domain}")
        if not torch.isfinite(p).all():
            raise NonFiniteError("non-finite pixels in image batch")
        lo, hi = p.min().item(), p.max().item()
        if lo < -1 - PIXEL_TOL or hi > 1 + PIXEL_TOL:
            raise ConfigError(f"pixel range [{lo:.4f}, {hi:.4f}] outside [-1, 1]")
        if self.scene_ids is not None and len(self.scene_ids) != p.shape[0]:
            raise ConfigError("scene_ids length must match batch size")

    def __len__(self) -> int:
        return self.pixels.shape[0]


@dataclass
class ContentCode:
    """Spatial feature map; the domain-invariant representation."""

    features: Tensor

    def __post_init__(self):
        if self.features.ndim != 4:
            raise ConfigError(f"content code must be 4-D, got {self.features.ndim}-D")


@dataclass
class StyleCode:
    """Fixed-length per-image style vector; domain-specific."""

    values: Tensor

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ConfigError(f"style code must be (batch, dim), got {tuple(self.values.shape)}")

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class StylePrior:
    """Standard normal over style dimensions with its own sampler state."""

    dim: int = 8
    generator: torch.Generator = field(default_factory=torch.Generator)

    def sample(self, n: int) -> StyleCode:
        if n < 1:
            raise ConfigError(f"need n >= 1 style draws, got {n}")
        return StyleCode(torch.randn(n, self.dim, generator=self.generator))


def sample_style(prior: StylePrior, n: int) -> StyleCode:
    return prior.sample(n)


@dataclass
class LossWeights:
    """Weights for the reconstruction / adversarial / latent loss blend."""

    alpha: float = 25.0
    beta: float = 10.0
    gamma: float = 0.1

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigError("loss weights must be nonnegative")


@dataclass
class LossReport:
    step: int
    recon: float
    adv_g: float
    adv_d: float
    latent: float
    total: float

    def to_dict(self) -> dict:
        return {"step": self.step, "recon": self.recon, "adv_g": self.adv_g,
                "adv_d": self.adv_d, "latent": self.latent, "total": self.total}
