"""Domain rendering styles and the scene -> image renderer.

Domain 1 is CT-like: organ brighter than background, narrow bands, mild
noise, no bias field. Domain 2 is MRI-like: inverted/shifted contrast, a
smooth multiplicative bias field, heavier noise, and contrast phases that
boost the organ signal (pre < venous < arterial enhancement).
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ConfigError
from .scenes import Scene

PHASES = ("pre", "arterial", "venous")
PHASE_ORGAN_BOOST = {"pre": 0.0, "arterial": 0.22, "venous": 0.10}

# nominal content intensities used for domain-gap validation
NOMINAL_ORGAN = 0.65
NOMINAL_BACKGROUND = 0.20


@dataclass(frozen=True)
class DomainStyle:
    """Appearance parameters for one domain (and contrast phase, domain 2 only)."""

    domain: int
    gain: float
    offset: float
    phase: str = "none"
    organ_boost: float = 0.0
    bias_amplitude: float = 0.0
    noise_sigma: float = 0.0
    texture_amplitude: float = 0.0

    def __post_init__(self):
        if self.domain not in (1, 2):
            raise ConfigError(f"domain must be 1 or 2, got {self.domain}")
        if self.phase != "none" and self.domain != 2:
            raise ConfigError("contrast phases apply to domain 2 only")
        if self.phase != "none" and self.phase not in PHASES:
            raise ConfigError(f"unknown phase {self.phase!r}")

    def transfer(self, v: np.ndarray) -> np.ndarray:
        return self.offset + self.gain * v

    def contrast_gap(self, organ: float = NOMINAL_ORGAN, background: float = NOMINAL_BACKGROUND) -> float:
        """Organ-minus-background mean intensity gap in [-1, 1] pixel units."""
        organ_out = self.offset + self.gain * organ + self.organ_boost
        bg_out = self.offset + self.gain * background
        return 2.0 * (organ_out - bg_out)


def domain1_style() -> DomainStyle:
    return DomainStyle(domain=1, gain=1.0, offset=0.0,
                       noise_sigma=0.015, texture_amplitude=0.012)


def domain2_style(phase: str = "pre") -> DomainStyle:
    if phase not in PHASES:
        raise ConfigError(f"unknown phase {phase!r}, expected one of {PHASES}")
    return DomainStyle(domain=2, gain=-0.9, offset=0.95, phase=phase,
                       organ_boost=PHASE_ORGAN_BOOST[phase],
                       bias_amplitude=0.22, noise_sigma=0.04,
                       texture_amplitude=0.02)


def default_style(domain: int, phase: str = "pre") -> DomainStyle:
    return domain1_style() if domain == 1 else domain2_style(phase)


def jitter_style(style: DomainStyle, rng: np.random.Generator, strength: float = 1.0) -> DomainStyle:
    """Per-item appearance variation within a domain; anatomy is untouched."""
    if strength == 0:
        return style
    s = strength
    return replace(
        style,
        gain=style.gain * rng.uniform(1 - 0.08 * s, 1 + 0.08 * s),
        offset=style.offset + rng.uniform(-0.04 * s, 0.04 * s),
        organ_boost=style.organ_boost + rng.uniform(-0.02 * s, 0.02 * s),
        bias_amplitude=style.bias_amplitude * rng.uniform(1 - 0.2 * s, 1 + 0.2 * s),
        noise_sigma=style.noise_sigma * rng.uniform(1 - 0.2 * s, 1 + 0.2 * s),
        texture_amplitude=style.texture_amplitude * rng.uniform(1 - 0.2 * s, 1 + 0.2 * s),
    )


def smooth_field(rng: np.random.Generator, size: int, sigma_frac: float = 0.125) -> np.ndarray:
    """Smooth random field normalized to peak magnitude 1."""
    field = gaussian_filter(rng.standard_normal((size, size)), sigma=sigma_frac * size)
    peak = np.abs(field).max()
    return field / peak if peak > 0 else field


def render(scene: Scene, style: DomainStyle, rng: np.random.Generator,
           image_size: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Render one scene under a style.

    Returns (image, mask): image is float32 (1, H, W) in [-1, 1]; the mask is
    uint8 (H, W) and depends only on scene geometry.
    """
    mask = scene.organ_mask(image_size)
    v = style.transfer(scene.region_intensity(image_size))
    if style.organ_boost != 0.0:
        v = v + style.organ_boost * mask
    if style.bias_amplitude > 0:
        v = v * (1.0 + style.bias_amplitude * smooth_field(rng, image_size))
    if style.texture_amplitude > 0:
        texture_rng = np.random.default_rng(scene.texture_seed)
        v = v + style.texture_amplitude * smooth_field(texture_rng, image_size, sigma_frac=0.0625)
    if style.noise_sigma > 0:
        v = v + rng.normal(0.0, style.noise_sigma, size=(image_size, image_size))
    image = (2.0 * np.clip(v, 0.0, 1.0) - 1.0).astype(np.float32)[None]
    return image, mask
