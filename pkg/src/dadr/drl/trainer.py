"""Adversarial training loop: one discriminator update, then one update of the
encoders and generators, per step. Deterministic for a fixed seed."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..errors import ConfigError, TrainingDiverged
from ..records import append_record
from .losses import (
    discriminator_loss,
    generator_adv_loss,
    latent_terms,
    total_loss,
    translation_forward,
)
from .model import DRLModel
from .types import ImageBatch, LossReport, LossWeights, StylePrior

ADAM_BETAS = (0.5, 0.999)


@dataclass
class DRLTrainConfig:
    steps: int = 3000
    batch_size: int = 4
    learning_rate: float = 1e-4
    grad_clip: float = 10.0
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0


class BatchSampler:
    """Endless equal-size batch pairs from the two domains, shuffled per pass.

    Image order is a pure function of the seed, so training runs reproduce.
    """

    def __init__(self, items_domain1, items_domain2, batch_size: int, seed: int = 0):
        if not items_domain1 or not items_domain2:
            raise ConfigError("both domains need at least one training image")
        self.images = {
            1: torch.from_numpy(np.stack([it.image for it in items_domain1])).float(),
            2: torch.from_numpy(np.stack([it.image for it in items_domain2])).float(),
        }
        self.batch_size = batch_size
        self._rng = np.random.default_rng(seed)
        self._queues = {1: [], 2: []}

    def _next_indices(self, domain: int) -> np.ndarray:
        queue = self._queues[domain]
        while len(queue) < self.batch_size:
            queue += list(self._rng.permutation(self.images[domain].shape[0]))
        picked, self._queues[domain] = queue[: self.batch_size], queue[self.batch_size :]
        return np.asarray(picked)

    def next_pair(self) -> tuple[ImageBatch, ImageBatch]:
        batches = []
        for domain in (1, 2):
            idx = self._next_indices(domain)
            batches.append(ImageBatch(pixels=self.images[domain][idx], domain=domain))
        return batches[0], batches[1]


class DRLTrainer:
    def __init__(self, model: DRLModel, config: DRLTrainConfig,
                 records_path: str | Path | None = None):
        self.model = model
        self.config = config
        self.records_path = Path(records_path) if records_path else None
        self.opt_g = torch.optim.Adam(model.generator_side_parameters(),
                                      lr=config.learning_rate, betas=ADAM_BETAS)
        self.opt_d = torch.optim.Adam(model.discriminator_parameters(),
                                      lr=config.learning_rate, betas=ADAM_BETAS)
        gen = torch.Generator().manual_seed(config.seed)
        self.prior = StylePrior(dim=model.config.style_dim, generator=gen)
        self.step_count = 0
        self.stats = {"clip_events": 0, "clamp_events": 0}

    def _clip(self, params) -> None:
        params = [p for p in params if p.grad is not None]
        norm = torch.nn.utils.clip_grad_norm_(params, self.config.grad_clip)
        if norm > self.config.grad_clip:
            self.stats["clip_events"] += 1

    def train_step(self, x1: ImageBatch, x2: ImageBatch) -> LossReport:
        if len(x1) == 0 or len(x1) != len(x2):
            raise ConfigError(f"need equal nonempty batches, got {len(x1)} and {len(x2)}")
        model, w = self.model, self.config.weights
        counters = self.stats
        s1 = self.prior.sample(len(x1))
        s2 = self.prior.sample(len(x2))

        # discriminator phase: fakes detached inside discriminator_loss
        with torch.no_grad():
            _, _, x12_d, x21_d = translation_forward(model, x1, x2, s1, s2)
        self.opt_d.zero_grad()
        d_loss = discriminator_loss(model, x1, x2, x12_d, x21_d, counters)
        if not torch.isfinite(d_loss):
            raise TrainingDiverged(f"non-finite discriminator loss at step {self.step_count}")
        d_loss.backward()
        self._clip(self.model.discriminator_parameters())
        self.opt_d.step()

        # encoder/generator phase; content codes are shared between the
        # reconstruction and translation paths
        self.opt_g.zero_grad()
        c1, c2, x12, x21 = translation_forward(model, x1, x2, s1, s2)
        rec1 = model.decode(c1, model.encode_style(x1), 1)
        rec2 = model.decode(c2, model.encode_style(x2), 2)
        recon = ((rec1.pixels - x1.pixels).abs().mean()
                 + (rec2.pixels - x2.pixels).abs().mean())
        adv_g = generator_adv_loss(model, x12, x21, counters)
        latent = latent_terms(model, c1, c2, s1, s2, x12, x21)
        g_loss = total_loss(recon, adv_g, latent, w)
        g_loss.backward()
        self._clip(self.model.generator_side_parameters())
        self.opt_g.step()

        self.step_count += 1
        recon_v, adv_g_v, latent_v = recon.item(), adv_g.item(), latent.item()
        report = LossReport(
            step=self.step_count,
            recon=recon_v,
            adv_g=adv_g_v,
            adv_d=d_loss.item(),
            latent=latent_v,
            total=w.alpha * recon_v + w.beta * adv_g_v + w.gamma * latent_v,
        )
        if self.records_path is not None:
            append_record(self.records_path, report.to_dict())
        return report

    def fit(self, sampler: BatchSampler, steps: int | None = None) -> list[LossReport]:
        steps = self.config.steps if steps is None else steps
        return [self.train_step(*sampler.next_pair()) for _ in range(steps)]

    def rng_states(self) -> dict[str, bytes]:
        return {"style_prior": self.prior.generator.get_state().numpy().tobytes()}

    def save(self, path: str | Path, extra_config: dict | None = None) -> None:
        config = {"train": {**self.config.__dict__, "weights": self.config.weights.__dict__}}
        if extra_config:
            config.update(extra_config)
        self.model.save(path, step=self.step_count, rng_states=self.rng_states(),
                        extra_config=config)


def train_drl(model: DRLModel, items_domain1, items_domain2, config: DRLTrainConfig,
              records_path: str | Path | None = None) -> tuple[DRLTrainer, list[LossReport]]:
    """Convenience wrapper: build sampler and trainer, run the configured steps."""
    sampler = BatchSampler(items_domain1, items_domain2, config.batch_size, seed=config.seed)
    trainer = DRLTrainer(model, config, records_path=records_path)
    reports = trainer.fit(sampler)
    return trainer, reports
