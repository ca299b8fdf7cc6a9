"""Per-domain content/style encoders, style-conditioned generators, and
discriminators, all assembled from shape-checked layer spec chains."""

import dataclasses
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..checkpoint import load_checkpoint, save_checkpoint
from ..errors import ConfigError
from ..nn_core import LayerSpec, SpecNet, StyleMLP, init_parameters
from .types import ContentCode, ImageBatch, StyleCode, StylePrior


@dataclass
class DRLConfig:
    image_size: int = 64
    in_channels: int = 1
    base_channels: int = 16
    n_downsample: int = 2
    n_res_encoder: int = 2
    n_res_generator: int = 3
    style_dim: int = 8
    style_hidden: int = 64
    disc_channels: int = 16
    disc_layers: int = 3
    patch_discriminator: bool = False
    # weight tying across the domain pair, making the shared content space
    # structural rather than merely encouraged by the latent loss:
    #   none     -- fully independent networks
    #   residual -- tie the residual blocks of content encoders and generators
    #   deep     -- additionally tie down/upsampling stages; only the encoder
    #               input stem, generator output conv and style paths stay
    #               domain-specific
    weight_sharing: str = "deep"
    # start the unshared halves of each domain pair from identical weights
    mirror_init: bool = False

    def __post_init__(self):
        if self.image_size < 8 or (self.image_size & (self.image_size - 1)):
            raise ConfigError(f"image_size must be a power of two >= 8, got {self.image_size}")
        if self.image_size % (2 ** self.n_downsample):
            raise ConfigError("image_size must be divisible by the downsampling factor")
        if self.style_dim < 1:
            raise ConfigError("style_dim must be >= 1")
        if self.weight_sharing not in ("none", "residual", "deep"):
            raise ConfigError(f"weight_sharing must be none/residual/deep, got {self.weight_sharing!r}")

    @property
    def content_channels(self) -> int:
        return self.base_channels * 2 ** self.n_downsample

    @property
    def content_size(self) -> int:
        return self.image_size // 2 ** self.n_downsample

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def content_encoder_specs(cfg: DRLConfig) -> list[LayerSpec]:
    specs = [LayerSpec.conv(cfg.in_channels, cfg.base_channels, kernel=7, padding=3,
                            norm="in", activation="relu")]
    c = cfg.base_channels
    for _ in range(cfg.n_downsample):
        specs.append(LayerSpec.downsample(c, 2 * c, norm="in", activation="relu"))
        c *= 2
    specs += [LayerSpec.residual(c, norm="in") for _ in range(cfg.n_res_encoder)]
    # terminal norm pins the content code to unit per-channel scale, so the two
    # encoders output codes in one comparable space
    specs.append(LayerSpec.instance_norm(c))
    return specs


def style_encoder_specs(cfg: DRLConfig) -> list[LayerSpec]:
    specs = [LayerSpec.conv(cfg.in_channels, cfg.base_channels, kernel=7, padding=3,
                            activation="relu")]
    c = cfg.base_channels
    for _ in range(cfg.n_downsample + 1):
        nxt = min(2 * c, cfg.content_channels)
        specs.append(LayerSpec.downsample(c, nxt, activation="relu"))
        c = nxt
    specs += [LayerSpec.pool(), LayerSpec.dense(c, cfg.style_dim)]
    return specs


def generator_specs(cfg: DRLConfig) -> list[LayerSpec]:
    specs = [LayerSpec.residual(cfg.content_channels, norm="adain")
             for _ in range(cfg.n_res_generator)]
    c = cfg.content_channels
    for _ in range(cfg.n_downsample):
        specs.append(LayerSpec.upsample(c, c // 2, activation="relu"))
        c //= 2
    specs.append(LayerSpec.conv(c, cfg.in_channels, kernel=7, padding=3, activation="tanh"))
    return specs


def discriminator_specs(cfg: DRLConfig) -> list[LayerSpec]:
    specs = []
    c_in, c = cfg.in_channels, cfg.disc_channels
    for _ in range(cfg.disc_layers):
        specs.append(LayerSpec.conv(c_in, c, kernel=4, stride=2, padding=1, activation="relu"))
        c_in, c = c, 2 * c
    if cfg.patch_discriminator:
        specs.append(LayerSpec.conv(c_in, 1, kernel=3, padding=1))
    else:
        specs += [LayerSpec.pool(), LayerSpec.dense(c_in, 1)]
    return specs


class StyledGenerator(nn.Module):
    """Generator whose AdaIN layers are driven by an MLP on the style code."""

    def __init__(self, cfg: DRLConfig):
        super().__init__()
        shape = (cfg.content_channels, cfg.content_size, cfg.content_size)
        self.net = SpecNet(generator_specs(cfg), shape)
        self.mlp = StyleMLP(cfg.style_dim, self.net.adain_layout(), cfg.style_hidden)

    def forward(self, content: torch.Tensor, style: torch.Tensor) -> torch.Tensor:
        return self.net(content, self.mlp(style))


class Discriminator(nn.Module):
    """Binary classifier; outputs probabilities in (0, 1), per image or per patch."""

    def __init__(self, cfg: DRLConfig):
        super().__init__()
        shape = (cfg.in_channels, cfg.image_size, cfg.image_size)
        self.net = SpecNet(discriminator_specs(cfg), shape)

    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.net(pixels))


class DRLModel(nn.Module):
    """Two content encoders, two style encoders, two styled generators, two
    discriminators; the content spaces share one shape by construction."""

    def __init__(self, config: DRLConfig, seed: int = 0):
        super().__init__()
        self.config = config
        enc_shape = (config.in_channels, config.image_size, config.image_size)
        self.content_encoders = nn.ModuleDict(
            {d: SpecNet(content_encoder_specs(config), enc_shape) for d in ("1", "2")})
        self.style_encoders = nn.ModuleDict(
            {d: SpecNet(style_encoder_specs(config), enc_shape) for d in ("1", "2")})
        self.generators = nn.ModuleDict({d: StyledGenerator(config) for d in ("1", "2")})
        self.discriminators = nn.ModuleDict({d: Discriminator(config) for d in ("1", "2")})
        init_parameters(self, torch.Generator().manual_seed(seed))
        if config.mirror_init:
            for pair in (self.content_encoders, self.style_encoders,
                         self.generators, self.discriminators):
                pair["2"].load_state_dict(pair["1"].state_dict())
        if config.weight_sharing != "none":
            shared_kinds = {"residual"}
            if config.weight_sharing == "deep":
                shared_kinds |= {"downsample", "upsample"}
            enc1, enc2 = self.content_encoders["1"], self.content_encoders["2"]
            for i, spec in enumerate(enc1.specs):
                if spec.kind in shared_kinds:
                    enc2.layers[i] = enc1.layers[i]
            gen1, gen2 = self.generators["1"].net, self.generators["2"].net
            for i, spec in enumerate(gen1.specs):
                if spec.kind in shared_kinds:
                    gen2.layers[i] = gen1.layers[i]

    # -- core operations -----------------------------------------------------

    def _check_input(self, x: ImageBatch) -> None:
        expected = (self.config.in_channels, self.config.image_size, self.config.image_size)
        if tuple(x.pixels.shape[1:]) != expected:
            raise ConfigError(
                f"image batch shaped {tuple(x.pixels.shape[1:])}, model configured for {expected}")

    def encode_content(self, x: ImageBatch) -> ContentCode:
        self._check_input(x)
        return ContentCode(self.content_encoders[str(x.domain)](x.pixels))

    def encode_style(self, x: ImageBatch) -> StyleCode:
        self._check_input(x)
        return StyleCode(self.style_encoders[str(x.domain)](x.pixels))

    def decode(self, content: ContentCode, style: StyleCode, domain: int) -> ImageBatch:
        if domain not in (1, 2):
            raise ConfigError(f"domain must be 1 or 2, got {domain}")
        if style.dim != self.config.style_dim:
            raise ConfigError(f"style code has dim {style.dim}, model expects {self.config.style_dim}")
        pixels = self.generators[str(domain)](content.features, style.values)
        return ImageBatch(pixels=pixels, domain=domain)

    def translate(self, x: ImageBatch, target_domain: int,
                  style: StyleCode | StylePrior) -> ImageBatch:
        if target_domain == x.domain:
            raise ConfigError("translation target must differ from the source domain")
        if isinstance(style, StylePrior):
            style = style.sample(len(x))
        out = self.decode(self.encode_content(x), style, target_domain)
        out.scene_ids = x.scene_ids
        return out

    def style_transfer(self, src: ImageBatch, reference: ImageBatch) -> ImageBatch:
        """Render src content with the style encoded from a reference image,
        in the reference's domain. A single reference is broadcast over src."""
        style = self.encode_style(reference)
        values = style.values
        if values.shape[0] == 1 and len(src) > 1:
            values = values.expand(len(src), -1)
        elif values.shape[0] != len(src):
            raise ConfigError(f"reference batch {values.shape[0]} incompatible with source batch {len(src)}")
        out = self.decode(self.encode_content(src), StyleCode(values), reference.domain)
        out.scene_ids = src.scene_ids
        return out

    def content_only(self, x: ImageBatch) -> ImageBatch:
        """Render the content code through the canonical generator (domain 1)
        with the all-zero style, for inputs of either domain."""
        content = self.encode_content(x)
        zero = StyleCode(torch.zeros(len(x), self.config.style_dim,
                                     dtype=x.pixels.dtype, device=x.pixels.device))
        pixels = self.generators["1"](content.features, zero.values)
        return ImageBatch(pixels=pixels, domain=x.domain, scene_ids=x.scene_ids)

    def discriminate(self, pixels: torch.Tensor, domain: int) -> torch.Tensor:
        return self.discriminators[str(domain)](pixels)

    # -- parameter groups ----------------------------------------------------

    def generator_side_parameters(self):
        for module in (self.content_encoders, self.style_encoders, self.generators):
            yield from module.parameters()

    def discriminator_parameters(self):
        yield from self.discriminators.parameters()

    # -- persistence -----------------------------------------------------------

    def save(self, path, step: int = 0, rng_states: dict[str, bytes] | None = None,
             extra_config: dict | None = None) -> None:
        tensors = {name: param.detach().numpy() for name, param in self.state_dict().items()}
        config = {"model": self.config.to_dict()}
        if extra_config:
            config.update(extra_config)
        save_checkpoint(path, tensors, config, step, rng_states)

    @classmethod
    def load(cls, path) -> tuple["DRLModel", dict, int, dict[str, bytes]]:
        tensors, config, step, rng = load_checkpoint(path)
        model = cls(DRLConfig(**config["model"]))
        state = {name: torch.from_numpy(np.ascontiguousarray(arr))
                 for name, arr in tensors.items()}
        model.load_state_dict(state)
        return model, config, step, rng
