from .losses import loss_adv, loss_latent, loss_recon, total_loss
from .model import DRLConfig, DRLModel
from .trainer import BatchSampler, DRLTrainConfig, DRLTrainer, train_drl
from .types import (
    ContentCode,
    ImageBatch,
    LossReport,
    LossWeights,
    StyleCode,
    StylePrior,
    sample_style,
)

__all__ = [
    "BatchSampler", "ContentCode", "DRLConfig", "DRLModel", "DRLTrainConfig",
    "DRLTrainer", "ImageBatch", "LossReport", "LossWeights", "StyleCode",
    "StylePrior", "loss_adv", "loss_latent", "loss_recon", "sample_style",
    "total_loss", "train_drl",
]
