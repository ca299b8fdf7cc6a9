"""Training losses: in-domain reconstruction, cross-domain adversarial terms
(non-saturating generator form), latent round-trip reconstruction, and their
weighted total."""

import torch
from torch import Tensor

from ..errors import ConfigError, TrainingDiverged
from .model import DRLModel
from .types import ImageBatch, LossWeights, StyleCode

PROB_EPS = 1e-7


def _check_domains(x1: ImageBatch, x2: ImageBatch) -> None:
    if x1.domain != 1 or x2.domain != 2:
        raise ConfigError(f"expected batches from domains 1 and 2, got {x1.domain} and {x2.domain}")


def _log_prob(p: Tensor, counters: dict | None) -> Tensor:
    if counters is not None:
        outside = int(((p < PROB_EPS) | (p > 1 - PROB_EPS)).sum().item())
        if outside:
            counters["clamp_events"] = counters.get("clamp_events", 0) + outside
    return torch.log(p.clamp(PROB_EPS, 1 - PROB_EPS))


def translation_forward(model: DRLModel, x1: ImageBatch, x2: ImageBatch,
                        s1: StyleCode, s2: StyleCode):
    """Encode both batches and translate each into the other domain."""
    c1 = model.encode_content(x1)
    c2 = model.encode_content(x2)
    x12 = model.decode(c1, s2, 2)
    x21 = model.decode(c2, s1, 1)
    return c1, c2, x12, x21


def loss_recon(model: DRLModel, x1: ImageBatch, x2: ImageBatch) -> Tensor:
    """Mean per-pixel L1 of both in-domain reconstructions, summed over domains."""
    _check_domains(x1, x2)
    total = None
    for x in (x1, x2):
        recon = model.decode(model.encode_content(x), model.encode_style(x), x.domain)
        term = (recon.pixels - x.pixels).abs().mean()
        total = term if total is None else total + term
    return total


def discriminator_loss(model: DRLModel, x1: ImageBatch, x2: ImageBatch,
                       x12: ImageBatch, x21: ImageBatch,
                       counters: dict | None = None) -> Tensor:
    """Both directions of the cross-domain objective, negated for minimization.
    Translated images are detached: this loss trains the discriminators only."""
    loss = torch.zeros((), dtype=x1.pixels.dtype)
    for real, fake in ((x2, x12), (x1, x21)):
        d = model.discriminate
        loss = loss - _log_prob(1 - d(fake.pixels.detach(), real.domain), counters).mean()
        loss = loss - _log_prob(d(real.pixels, real.domain), counters).mean()
    return loss


def generator_adv_loss(model: DRLModel, x12: ImageBatch, x21: ImageBatch,
                       counters: dict | None = None) -> Tensor:
    """Non-saturating generator objective, summed over both directions."""
    loss = torch.zeros((), dtype=x12.pixels.dtype)
    for fake in (x12, x21):
        loss = loss - _log_prob(model.discriminate(fake.pixels, fake.domain), counters).mean()
    return loss


def loss_adv(model: DRLModel, x1: ImageBatch, x2: ImageBatch,
             s1: StyleCode, s2: StyleCode,
             counters: dict | None = None) -> tuple[Tensor, Tensor]:
    """Returns (generator term, discriminator term) for sampled target styles."""
    _check_domains(x1, x2)
    _, _, x12, x21 = translation_forward(model, x1, x2, s1, s2)
    gen = generator_adv_loss(model, x12, x21, counters)
    disc = discriminator_loss(model, x1, x2, x12, x21, counters)
    return gen, disc


def latent_terms(model: DRLModel, c1, c2, s1: StyleCode, s2: StyleCode,
                 x12: ImageBatch, x21: ImageBatch) -> Tensor:
    """L1 round-trip errors of content and style through the translations,
    mean-reduced per element, summed over the four terms."""
    c1_rt = model.encode_content(x12).features
    s2_rt = model.encode_style(x12).values
    c2_rt = model.encode_content(x21).features
    s1_rt = model.encode_style(x21).values
    return ((c1_rt - c1.features).abs().mean()
            + (s2_rt - s2.values).abs().mean()
            + (c2_rt - c2.features).abs().mean()
            + (s1_rt - s1.values).abs().mean())


def loss_latent(model: DRLModel, x1: ImageBatch, x2: ImageBatch,
                s1: StyleCode, s2: StyleCode) -> Tensor:
    _check_domains(x1, x2)
    c1, c2, x12, x21 = translation_forward(model, x1, x2, s1, s2)
    return latent_terms(model, c1, c2, s1, s2, x12, x21)


def total_loss(recon, adv_g, latent, weights: LossWeights = LossWeights()):
    """Weighted sum of the generator-phase components; aborts on non-finite input."""
    parts = {"recon": recon, "adv_g": adv_g, "latent": latent}
    for name, value in parts.items():
        v = float(value) if not isinstance(value, Tensor) else value
        finite = torch.isfinite(v).all() if isinstance(v, Tensor) else torch.isfinite(torch.tensor(v))
        if not finite:
            raise TrainingDiverged(f"non-finite loss component {name!r}: {value}")
    return weights.alpha * recon + weights.beta * adv_g + weights.gamma * latent
