import numpy as np
import pytest
import torch

from dadr.drl import (
    ContentCode,
    DRLConfig,
    DRLModel,
    ImageBatch,
    LossWeights,
    StyleCode,
    StylePrior,
    sample_style,
)
from dadr.errors import ConfigError, NonFiniteError


def micro_config(**kw):
    defaults = dict(image_size=16, base_channels=4, n_downsample=2, n_res_encoder=1,
                    n_res_generator=1, style_dim=3, style_hidden=8,
                    disc_channels=4, disc_layers=2)
    defaults.update(kw)
    return DRLConfig(**defaults)


def random_batch(domain, n=2, size=16, seed=0):
    g = torch.Generator().manual_seed(seed)
    return ImageBatch(pixels=torch.rand(n, 1, size, size, generator=g) * 2 - 1, domain=domain)


class TestImageBatch:
    def test_range_enforced(self):
        with pytest.raises(ConfigError):
            ImageBatch(pixels=torch.full((1, 1, 16, 16), 1.5), domain=1)

    def test_square_power_of_two_enforced(self):
        with pytest.raises(ConfigError):
            ImageBatch(pixels=torch.zeros(1, 1, 24, 24), domain=1)
        with pytest.raises(ConfigError):
            ImageBatch(pixels=torch.zeros(1, 1, 16, 32), domain=1)

    def test_domain_enforced(self):
        with pytest.raises(ConfigError):
            ImageBatch(pixels=torch.zeros(1, 1, 16, 16), domain=3)

    def test_nonfinite_rejected(self):
        px = torch.zeros(1, 1, 16, 16)
        px[0, 0, 0, 0] = float("inf")
        with pytest.raises(NonFiniteError):
            ImageBatch(pixels=px, domain=1)

    def test_scene_ids_length_checked(self):
        with pytest.raises(ConfigError):
            ImageBatch(pixels=torch.zeros(2, 1, 16, 16), domain=1, scene_ids=[1])


class TestStylePrior:
    def test_seeded_draws_reproducible(self):
        a = StylePrior(4, torch.Generator().manual_seed(3)).sample(5)
        b = StylePrior(4, torch.Generator().manual_seed(3)).sample(5)
        assert torch.equal(a.values, b.values)

    def test_zero_draws_rejected(self):
        prior = StylePrior(4, torch.Generator().manual_seed(0))
        with pytest.raises(ConfigError):
            prior.sample(0)

    def test_large_sample_statistics(self):
        prior = StylePrior(8, torch.Generator().manual_seed(1))
        draws = sample_style(prior, 10_000).values
        assert draws.shape == (10_000, 8)
        assert draws.mean(dim=0).abs().max().item() < 0.05
        assert (draws.var(dim=0) - 1).abs().max().item() < 0.1


class TestLossWeights:
    def test_defaults(self):
        w = LossWeights()
        assert (w.alpha, w.beta, w.gamma) == (25.0, 10.0, 0.1)

    def test_negative_rejected(self):
        with pytest.raises(ConfigError):
            LossWeights(alpha=-1)


class TestDRLModel:
    def test_content_code_quarter_resolution(self):
        model = DRLModel(DRLConfig(), seed=0)
        x = random_batch(1, n=2, size=64)
        code = model.encode_content(x)
        assert code.features.shape == (2, 64, 16, 16)

    def test_paper_scale_content_shape(self):
        cfg = DRLConfig(image_size=256, base_channels=64)
        assert cfg.content_channels == 256
        model = DRLModel(cfg, seed=0)
        x = random_batch(1, n=1, size=256)
        assert model.encode_content(x).features.shape == (1, 256, 64, 64)

    def test_shared_content_space_shapes(self):
        model = DRLModel(micro_config(), seed=0)
        c1 = model.encode_content(random_batch(1))
        c2 = model.encode_content(random_batch(2, seed=5))
        assert c1.features.shape == c2.features.shape

    def test_encode_deterministic(self):
        model = DRLModel(micro_config(), seed=0)
        x = random_batch(1)
        assert torch.equal(model.encode_content(x).features, model.encode_content(x).features)

    def test_style_code_length(self):
        model = DRLModel(DRLConfig(), seed=0)
        s = model.encode_style(random_batch(2, n=3, size=64))
        assert s.values.shape == (3, 8)

    def test_different_images_different_styles(self):
        model = DRLModel(micro_config(), seed=0)
        s1 = model.encode_style(random_batch(1, seed=1))
        s2 = model.encode_style(random_batch(1, seed=2))
        assert not torch.equal(s1.values, s2.values)

    def test_wrong_input_size_raises(self):
        model = DRLModel(micro_config(), seed=0)
        with pytest.raises(ConfigError):
            model.encode_content(random_batch(1, size=32))

    def test_decode_in_range_full_resolution(self):
        model = DRLModel(micro_config(), seed=0)
        x = random_batch(1)
        out = model.decode(model.encode_content(x), model.encode_style(x), 1)
        assert out.pixels.shape == x.pixels.shape
        assert out.pixels.min().item() >= -1 and out.pixels.max().item() <= 1

    def test_zeroed_output_layer_gives_constant_image(self):
        model = DRLModel(micro_config(), seed=0)
        final_conv = model.generators["1"].net.layers[-1].conv
        torch.nn.init.zeros_(final_conv.weight)
        torch.nn.init.zeros_(final_conv.bias)
        x = random_batch(1)
        out = model.content_only(x)
        assert torch.equal(out.pixels, torch.zeros_like(out.pixels))

    def test_fixed_content_distinct_styles_differ(self):
        model = DRLModel(micro_config(), seed=0)
        c = model.encode_content(random_batch(1))
        prior = StylePrior(3, torch.Generator().manual_seed(7))
        a = model.decode(c, prior.sample(2), 1)
        b = model.decode(c, prior.sample(2), 1)
        assert (a.pixels - b.pixels).abs().mean().item() > 0

    def test_translate_tags_target_domain(self):
        model = DRLModel(micro_config(), seed=0)
        prior = StylePrior(3, torch.Generator().manual_seed(0))
        out = model.translate(random_batch(1), 2, prior)
        assert out.domain == 2
        assert out.pixels.min().item() >= -1 and out.pixels.max().item() <= 1

    def test_translate_same_domain_rejected(self):
        model = DRLModel(micro_config(), seed=0)
        prior = StylePrior(3, torch.Generator().manual_seed(0))
        with pytest.raises(ConfigError):
            model.translate(random_batch(1), 1, prior)

    def test_style_dim_mismatch_rejected(self):
        model = DRLModel(micro_config(), seed=0)
        c = model.encode_content(random_batch(1))
        with pytest.raises(ConfigError):
            model.decode(c, StyleCode(torch.zeros(2, 5)), 1)

    def test_content_only_same_renderer_both_domains(self):
        model = DRLModel(micro_config(), seed=0)
        x1, x2 = random_batch(1), random_batch(2, seed=4)
        a, b = model.content_only(x1), model.content_only(x2)
        assert a.pixels.shape == b.pixels.shape
        # canonical renderer: generator 1 with the all-zero style
        zero = StyleCode(torch.zeros(len(x2), 3))
        manual = model.generators["1"](model.encode_content(x2).features, zero.values)
        assert torch.equal(b.pixels, manual)

    def test_content_only_deterministic(self):
        model = DRLModel(micro_config(), seed=0)
        x = random_batch(2, seed=6)
        assert torch.equal(model.content_only(x).pixels, model.content_only(x).pixels)

    def test_seeded_build_reproducible(self):
        a = DRLModel(micro_config(), seed=11)
        b = DRLModel(micro_config(), seed=11)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_patch_discriminator_output_map(self):
        model = DRLModel(micro_config(patch_discriminator=True), seed=0)
        probs = model.discriminate(random_batch(1).pixels, 1)
        assert probs.ndim == 4 and probs.shape[1] == 1
        assert ((probs > 0) & (probs < 1)).all()

    def test_per_image_discriminator_scalar(self):
        model = DRLModel(micro_config(), seed=0)
        probs = model.discriminate(random_batch(1).pixels, 1)
        assert probs.shape == (2, 1)


class TestCheckpoint:
    def test_save_load_bit_identical_forward(self, tmp_path):
        model = DRLModel(micro_config(), seed=0)
        path = tmp_path / "model.ckpt"
        model.save(path, step=17, rng_states={"train": b"\x01\x02"})
        loaded, config, step, rng = DRLModel.load(path)
        assert step == 17 and rng["train"] == b"\x01\x02"
        assert config["model"]["image_size"] == 16
        x = random_batch(1)
        assert torch.equal(model.content_only(x).pixels, loaded.content_only(x).pixels)
        s = model.encode_style(x)
        assert torch.equal(model.decode(model.encode_content(x), s, 1).pixels,
                           loaded.decode(loaded.encode_content(x), s, 1).pixels)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            DRLConfig(image_size=20)
        with pytest.raises(ConfigError):
            DRLConfig(style_dim=0)
