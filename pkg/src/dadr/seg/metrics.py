"""Binary masks, the Dice overlap metric, and the segmentation training loss."""

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor
from torch.nn import functional as F

from ..errors import ConfigError


@dataclass
class SegMask:
    """Binary mask aligned to an image; ground truth or prediction."""

    pixels: np.ndarray
    role: str = "ground-truth"

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2:
            raise ConfigError(f"mask must be 2-D, got shape {self.pixels.shape}")
        if not np.isin(self.pixels, (0, 1)).all():
            raise ConfigError("mask values must be 0 or 1")
        if self.role not in ("ground-truth", "prediction"):
            raise ConfigError(f"unknown mask role {self.role!r}")


def _as_binary(mask) -> np.ndarray:
    if isinstance(mask, SegMask):
        return mask.pixels.astype(bool)
    arr = np.asarray(mask)
    if arr.dtype != bool and not np.isin(arr, (0, 1)).all():
        raise ConfigError("mask values must be binary")
    return arr.astype(bool)


def dice(pred, gt) -> float:
    """Dice overlap 2|P∩G| / (|P|+|G|); two empty masks count as a perfect 1.0."""
    p, g = _as_binary(pred), _as_binary(gt)
    if p.shape != g.shape:
        raise ConfigError(f"mask shapes differ: {p.shape} vs {g.shape}")
    total = int(p.sum()) + int(g.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(p, g).sum()) / total


def bce_loss(logits: Tensor, target: Tensor) -> Tensor:
    return F.binary_cross_entropy_with_logits(logits, target)


def soft_dice_loss(logits: Tensor, target: Tensor, smooth: float = 1.0) -> Tensor:
    probs = torch.sigmoid(logits)
    intersection = (probs * target).sum()
    denom = probs.sum() + target.sum()
    return 1.0 - (2.0 * intersection + smooth) / (denom + smooth)


def seg_loss(logits: Tensor, target: Tensor) -> Tensor:
    """Binary cross-entropy plus soft Dice, equally weighted. Differentiable, >= 0."""
    if logits.shape != target.shape:
        raise ConfigError(f"logit shape {tuple(logits.shape)} != target shape {tuple(target.shape)}")
    return bce_loss(logits, target) + soft_dice_loss(logits, target)
