import numpy as np
import pytest

from dadr.errors import ConfigError
from dadr.synthdata import (
    DataConfig,
    DomainStyle,
    PHASES,
    default_style,
    domain1_style,
    domain2_style,
    gen_dataset,
    gen_scene,
    load_dataset,
    render,
    save_dataset,
)


def pixel_dice(a, b):
    inter = int(np.logical_and(a, b).sum())
    total = int(a.sum()) + int(b.sum())
    return 1.0 if total == 0 else 2.0 * inter / total


class TestScenes:
    def test_fixed_seed_reproduces_scene(self):
        a = gen_scene(np.random.default_rng(42), scene_id=1)
        b = gen_scene(np.random.default_rng(42), scene_id=1)
        assert a == b

    def test_area_bounds_hold(self):
        for seed in range(200):
            scene = gen_scene(np.random.default_rng(seed))
            frac = scene.organ_mask(64).mean()
            assert 0.05 <= frac <= 0.40, f"seed {seed}: {frac}"

    def test_blobs_inside_frame(self):
        for seed in range(50):
            scene = gen_scene(np.random.default_rng(seed))
            mask = scene.organ_mask(64)
            border = np.concatenate([mask[0], mask[-1], mask[:, 0], mask[:, -1]])
            assert not border.any()

    def test_distinct_seeds_distinct_geometry(self):
        masks = [gen_scene(np.random.default_rng(s)).organ_mask(64) for s in range(20)]
        scores = [pixel_dice(masks[i], masks[j])
                  for i in range(len(masks)) for j in range(i + 1, len(masks))]
        assert np.mean(scores) < 0.95

    def test_distractor_count(self):
        for seed in range(30):
            scene = gen_scene(np.random.default_rng(seed))
            assert 1 <= len(scene.distractors) <= 3


class TestRender:
    def test_mask_independent_of_style(self):
        scene = gen_scene(np.random.default_rng(0))
        _, m1 = render(scene, domain1_style(), np.random.default_rng(1))
        _, m2 = render(scene, domain2_style("arterial"), np.random.default_rng(2))
        assert np.array_equal(m1, m2)
        assert np.array_equal(m1, scene.organ_mask(64))

    def test_images_differ_across_domains_by_margin(self):
        config = DataConfig()
        scene = gen_scene(np.random.default_rng(3))
        img1, _ = render(scene, domain1_style(), np.random.default_rng(4))
        img2, _ = render(scene, domain2_style(), np.random.default_rng(5))
        assert np.abs(img1 - img2).mean() > config.domain_gap_margin

    def test_zero_noise_identity_transfer_is_piecewise_constant(self):
        scene = gen_scene(np.random.default_rng(6))
        style = DomainStyle(domain=1, gain=1.0, offset=0.0)
        img, mask = render(scene, style, np.random.default_rng(7))
        organ = img[0][mask == 1]
        assert organ.std() < 1e-6
        # number of distinct pixel values = background + organ + distractors
        values = np.unique(img)
        assert len(values) == 2 + len(scene.distractors)

    def test_pixel_range(self):
        for seed in range(10):
            scene = gen_scene(np.random.default_rng(seed))
            for style in (domain1_style(), domain2_style("venous")):
                img, _ = render(scene, style, np.random.default_rng(seed + 100))
                assert img.min() >= -1.0 and img.max() <= 1.0
                assert img.dtype == np.float32

    def test_phase_contrast_orderings_distinct(self):
        scene = gen_scene(np.random.default_rng(8))
        mask = scene.organ_mask(64)
        gaps = {}
        for phase in PHASES:
            img, _ = render(scene, domain2_style(phase), np.random.default_rng(9))
            gaps[phase] = img[0][mask == 1].mean() - img[0][mask == 0].mean()
        values = sorted(gaps.values())
        assert all(abs(a - b) > 0.02 for a, b in zip(values, values[1:]))
        # enhancement peak at arterial, venous between pre and arterial
        assert gaps["pre"] < gaps["venous"] < gaps["arterial"]

    def test_phase_on_domain1_rejected(self):
        with pytest.raises(ConfigError):
            DomainStyle(domain=1, gain=1.0, offset=0.0, phase="pre")


class TestDataset:
    def test_default_ratio(self):
        ds = gen_dataset(DataConfig(scenes_domain2=8, paired_scenes=2), seed=0)
        d1 = ds.select(domain=1)
        d2 = ds.select(domain=2)
        assert len(d1) / len(d2) == pytest.approx(6.5, abs=0.1)

    def test_every_scene_in_exactly_one_fold(self):
        ds = gen_dataset(DataConfig(scenes_domain2=8, folds=4, paired_scenes=0), seed=1)
        seen = {}
        for it in ds.items:
            seen.setdefault(it.scene_id, set()).add(it.fold)
        assert all(len(folds) == 1 for folds in seen.values())
        assert ds.fold_ids() == [0, 1, 2, 3]

    def test_fold_sizes_balanced_per_domain(self):
        ds = gen_dataset(DataConfig(scenes_domain2=10, folds=3, paired_scenes=0), seed=2)
        for domain in (1, 2):
            sizes = [len({it.scene_id for it in ds.select(domain=domain, folds=[f])})
                     for f in ds.fold_ids()]
            assert max(sizes) - min(sizes) <= 1

    def test_scene_ids_disjoint_across_domains(self):
        ds = gen_dataset(DataConfig(scenes_domain2=6, paired_scenes=3), seed=3)
        ids1 = {it.scene_id for it in ds.select(domain=1)}
        ids2 = {it.scene_id for it in ds.select(domain=2)}
        assert not ids1 & ids2

    def test_paired_subset_shares_scene_and_mask(self):
        ds = gen_dataset(DataConfig(scenes_domain2=6, paired_scenes=3), seed=4)
        paired1 = {it.scene_id: it for it in ds.select(domain=1, paired=True)}
        paired2 = {it.scene_id: it for it in ds.select(domain=2, paired=True)}
        assert set(paired1) == set(paired2) and len(paired1) == 3
        for sid in paired1:
            assert np.array_equal(paired1[sid].mask_data, paired2[sid].mask_data)
            assert paired1[sid].fold == -1

    def test_paired_items_never_selected_by_default(self):
        ds = gen_dataset(DataConfig(scenes_domain2=6, paired_scenes=3), seed=5)
        for it in ds.select(domain=1) + ds.select(domain=2):
            assert not it.paired

    def test_multiphase_renders_every_phase_per_scene(self):
        ds = gen_dataset(DataConfig(scenes_domain2=6, phases_domain2=PHASES, paired_scenes=0), seed=6)
        d2 = ds.select(domain=2)
        assert len(d2) == 18
        per_scene = {}
        for it in d2:
            per_scene.setdefault(it.scene_id, []).append(it.phase)
        assert all(sorted(v) == sorted(PHASES) for v in per_scene.values())

    def test_generation_deterministic(self):
        a = gen_dataset(DataConfig(scenes_domain2=4, paired_scenes=1), seed=7)
        b = gen_dataset(DataConfig(scenes_domain2=4, paired_scenes=1), seed=7)
        assert len(a.items) == len(b.items)
        for x, y in zip(a.items, b.items):
            assert np.array_equal(x.image, y.image)
            assert np.array_equal(x.mask_data, y.mask_data)
            assert (x.scene_id, x.domain, x.phase, x.fold, x.paired) == \
                   (y.scene_id, y.domain, y.phase, y.fold, y.paired)

    def test_audit_counts_only_inside_training_phase(self):
        ds = gen_dataset(DataConfig(scenes_domain2=4, paired_scenes=0), seed=8)
        item2 = ds.select(domain=2)[0]
        _ = item2.mask
        assert ds.audit.reads(2) == 0
        with ds.audit:
            _ = item2.mask
        assert ds.audit.reads(2) == 1

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigError):
            DataConfig(image_size=48)
        with pytest.raises(ConfigError):
            DataConfig(scenes_domain2=2, folds=3)
        with pytest.raises(ConfigError):
            DataConfig(phases_domain2=("pre", "bogus"))

    def test_save_load_round_trip(self, tmp_path):
        ds = gen_dataset(DataConfig(scenes_domain2=4, paired_scenes=1), seed=9)
        save_dataset(ds, tmp_path / "data")
        loaded = load_dataset(tmp_path / "data")
        assert loaded.config == ds.config and loaded.seed == 9
        assert len(loaded.items) == len(ds.items)
        for a, b in zip(ds.items, loaded.items):
            assert np.array_equal(a.mask_data, b.mask_data)
            assert np.abs(a.image - b.image).max() < 2.0 / 65535  # 16-bit quantization
            assert (a.scene_id, a.domain, a.phase, a.fold, a.paired) == \
                   (b.scene_id, b.domain, b.phase, b.fold, b.paired)

    def test_manifest_bytes_reproducible(self, tmp_path):
        for name in ("a", "b"):
            save_dataset(gen_dataset(DataConfig(scenes_domain2=4), seed=10), tmp_path / name)
        assert (tmp_path / "a/manifest.jsonl").read_bytes() == (tmp_path / "b/manifest.jsonl").read_bytes()
        img = next((tmp_path / "a/images").iterdir()).name
        assert (tmp_path / f"a/images/{img}").read_bytes() == (tmp_path / f"b/images/{img}").read_bytes()
