"""Segmentation training: Adam on BCE + soft Dice, scene-wise validation split,
best-validation-Dice model selection. Deterministic for a fixed seed."""

import copy
from dataclasses import dataclass, field

import numpy as np
import torch

from ..checkpoint import load_checkpoint, save_checkpoint
from ..errors import ConfigError, TrainingDiverged
from .metrics import dice, seg_loss
from .unet import UNet


@dataclass
class SegConfig:
    image_size: int = 64
    depth: int = 3
    base_channels: int = 16
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 1e-3
    val_fraction: float = 0.15
    threshold: float = 0.5
    seed: int = 0


@dataclass
class SegResult:
    model: UNet
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_dice: float = float("nan")


def build_unet(config: SegConfig) -> UNet:
    g = torch.Generator().manual_seed(config.seed)
    model = UNet(depth=config.depth, base_channels=config.base_channels, generator=g)
    model.validate(config.image_size)
    return model


def predict_mask(model: UNet, images: torch.Tensor, threshold: float = 0.5) -> np.ndarray:
    """Per-pixel sigmoid(logits) > threshold; returns (batch, H, W) uint8."""
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    model.eval()
    with torch.no_grad():
        probs = torch.sigmoid(model(images))
    return (probs[:, 0] > threshold).numpy().astype(np.uint8)


def _stack_images(items) -> torch.Tensor:
    return torch.from_numpy(np.stack([it.image for it in items])).float()


def _stack_masks(items) -> torch.Tensor:
    return torch.from_numpy(np.stack([it.mask for it in items])).float().unsqueeze(1)


def evaluate_dice(model: UNet, items, threshold: float = 0.5, batch_size: int = 16) -> list[float]:
    """Per-image Dice of thresholded predictions against ground truth."""
    scores = []
    for start in range(0, len(items), batch_size):
        chunk = items[start : start + batch_size]
        preds = predict_mask(model, _stack_images(chunk), threshold)
        scores += [dice(p, it.mask) for p, it in zip(preds, chunk)]
    return scores


def _split_by_scene(items, val_fraction: float, rng: np.random.Generator):
    scenes = sorted({it.scene_id for it in items})
    if val_fraction <= 0 or len(scenes) < 2:
        return list(items), []
    n_val = max(1, int(round(val_fraction * len(scenes))))
    val_scenes = set(np.array(scenes)[rng.permutation(len(scenes))[:n_val]].tolist())
    train = [it for it in items if it.scene_id not in val_scenes]
    val = [it for it in items if it.scene_id in val_scenes]
    return train, val


def seg_train(model: UNet, items, config: SegConfig) -> SegResult:
    """Train on (image, mask) items; keep the best-validation-Dice weights."""
    if not items:
        raise ConfigError("empty training dataset")
    model.validate(config.image_size)
    rng = np.random.default_rng(config.seed)
    g = torch.Generator().manual_seed(config.seed)
    train_items, val_items = _split_by_scene(items, config.val_fraction, rng)

    images = _stack_images(train_items)
    masks = _stack_masks(train_items)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    result = SegResult(model=model)
    best_state = None
    n = len(train_items)
    for epoch in range(config.epochs):
        model.train()
        order = torch.randperm(n, generator=g)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            optimizer.zero_grad()
            loss = seg_loss(model(images[idx]), masks[idx])
            if not torch.isfinite(loss):
                raise TrainingDiverged(f"non-finite segmentation loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            losses.append(loss.item())
        entry = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if val_items:
            val_dice = float(np.mean(evaluate_dice(model, val_items, config.threshold)))
            entry["val_dice"] = val_dice
            if not (result.best_val_dice >= val_dice):  # NaN-safe "improved"
                result.best_val_dice = val_dice
                result.best_epoch = epoch
                best_state = copy.deepcopy(model.state_dict())
        result.history.append(entry)

    if best_state is not None:
        model.load_state_dict(best_state)
    else:
        result.best_epoch = config.epochs - 1
    return result


def save_unet(model: UNet, path, config: dict, step: int = 0) -> None:
    tensors = {name: p.detach().numpy() for name, p in model.state_dict().items()}
    save_checkpoint(path, tensors, {"unet": {"depth": model.depth,
                                             "base_channels": model.base_channels},
                                    **config}, step)


def load_unet(path) -> tuple[UNet, dict]:
    tensors, config, _, _ = load_checkpoint(path)
    model = UNet(depth=config["unet"]["depth"], base_channels=config["unet"]["base_channels"])
    model.load_state_dict({name: torch.from_numpy(np.ascontiguousarray(arr))
                           for name, arr in tensors.items()})
    return model, config
