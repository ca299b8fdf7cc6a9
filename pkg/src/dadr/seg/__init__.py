from .metrics import SegMask, bce_loss, dice, seg_loss, soft_dice_loss
from .trainer import (
    SegConfig,
    SegResult,
    build_unet,
    evaluate_dice,
    load_unet,
    predict_mask,
    save_unet,
    seg_train,
)
from .unet import UNet

__all__ = [
    "SegConfig", "SegMask", "SegResult", "UNet", "bce_loss", "build_unet",
    "dice", "evaluate_dice", "load_unet", "predict_mask", "save_unet",
    "seg_loss", "seg_train", "soft_dice_loss",
]
