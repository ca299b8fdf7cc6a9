"""Scene geometry: one organ blob, a few distractors, all resolution-free.

A Scene is pure content. Its segmentation mask is derived exactly from the
geometry and never depends on rendering style.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

ORGAN_AREA_MIN = 0.05
ORGAN_AREA_MAX = 0.40
BORDER_MARGIN_PX = 2


@dataclass(frozen=True)
class Blob:
    """Smooth closed region: ellipse perturbed by low-frequency radial noise.

    Positions and radii are fractions of the image side, so the same blob
    rasterizes consistently at any resolution.
    """

    cx: float
    cy: float
    rx: float
    ry: float
    angle: float
    harmonics: tuple[tuple[int, float, float], ...]  # (k, cos amp, sin amp)
    intensity: float

    def mask(self, size: int) -> np.ndarray:
        ys, xs = np.mgrid[0:size, 0:size]
        dx = (xs + 0.5) / size - self.cx
        dy = (ys + 0.5) / size - self.cy
        ca, sa = np.cos(self.angle), np.sin(self.angle)
        u = (ca * dx + sa * dy) / self.rx
        v = (-sa * dx + ca * dy) / self.ry
        rho = np.sqrt(u * u + v * v)
        theta = np.arctan2(v, u)
        boundary = np.ones_like(rho)
        for k, a, b in self.harmonics:
            boundary += a * np.cos(k * theta) + b * np.sin(k * theta)
        return (rho <= boundary).astype(np.uint8)


@dataclass(frozen=True)
class Scene:
    scene_id: int
    organ: Blob
    distractors: tuple[Blob, ...]
    background_intensity: float
    texture_seed: int

    def organ_mask(self, size: int) -> np.ndarray:
        return self.organ.mask(size)

    def region_intensity(self, size: int) -> np.ndarray:
        """Content-space intensity map in [0, 1]: background, organ, distractors."""
        img = np.full((size, size), self.background_intensity, dtype=np.float64)
        for blob in self.distractors:
            img[blob.mask(size) == 1] = blob.intensity
        img[self.organ.mask(size) == 1] = self.organ.intensity
        return img


def _touches_border(mask: np.ndarray, margin: int = BORDER_MARGIN_PX) -> bool:
    return bool(
        mask[:margin].any() or mask[-margin:].any()
        or mask[:, :margin].any() or mask[:, -margin:].any()
    )


def _sample_harmonics(rng: np.random.Generator, ks, amp: float):
    out = []
    for k in ks:
        a = rng.uniform(0, amp)
        phase = rng.uniform(0, 2 * np.pi)
        out.append((int(k), a * np.cos(phase), a * np.sin(phase)))
    return tuple(out)


def gen_scene(rng: np.random.Generator, scene_id: int = 0, image_size: int = 64,
              max_tries: int = 100) -> Scene:
    """Sample a scene whose organ covers 5-40% of the frame, fully inside it."""
    organ = None
    for _ in range(max_tries):
        target = rng.uniform(0.08, 0.30)
        aspect = rng.uniform(0.6, 1.0)
        rx = float(np.sqrt(target / (np.pi * aspect)))
        ry = rx * aspect
        harmonics = _sample_harmonics(rng, range(2, 6), 0.06)
        reach = max(rx, ry) * (1 + sum(abs(a) + abs(b) for _, a, b in harmonics))
        margin = reach + (BORDER_MARGIN_PX + 1) / image_size
        if margin >= 0.5:
            continue
        candidate = Blob(
            cx=rng.uniform(margin, 1 - margin),
            cy=rng.uniform(margin, 1 - margin),
            rx=rx, ry=ry,
            angle=rng.uniform(0, np.pi),
            harmonics=harmonics,
            intensity=rng.uniform(0.58, 0.72),
        )
        m = candidate.mask(image_size)
        frac = m.mean()
        if ORGAN_AREA_MIN <= frac <= ORGAN_AREA_MAX and not _touches_border(m):
            organ = candidate
            break
    if organ is None:
        raise ConfigError(f"could not place an organ within {max_tries} tries")

    organ_m = organ.mask(image_size)
    occupied = organ_m.copy()
    distractors = []
    n_distractors = int(rng.integers(1, 4))
    for _ in range(n_distractors):
        for _ in range(50):
            r = rng.uniform(0.05, 0.11)
            aspect = rng.uniform(0.6, 1.0)
            harmonics = _sample_harmonics(rng, range(2, 4), 0.05)
            reach = r * (1 + sum(abs(a) + abs(b) for _, a, b in harmonics))
            margin = reach + (BORDER_MARGIN_PX + 1) / image_size
            blob = Blob(
                cx=rng.uniform(margin, 1 - margin),
                cy=rng.uniform(margin, 1 - margin),
                rx=r, ry=r * aspect,
                angle=rng.uniform(0, np.pi),
                harmonics=harmonics,
                intensity=rng.uniform(0.38, 0.52),
            )
            m = blob.mask(image_size)
            if not m.any() or _touches_border(m) or (m & occupied).any():
                continue
            distractors.append(blob)
            occupied |= m
            break
    if not distractors:
        raise ConfigError("could not place any distractor blob")

    return Scene(
        scene_id=scene_id,
        organ=organ,
        distractors=tuple(distractors),
        background_intensity=rng.uniform(0.18, 0.24),
        texture_seed=int(rng.integers(0, 2**31 - 1)),
    )
