"""Acceptance criteria for the whole package, one test per criterion.

Each test prints one PASS/FAIL line (run with -s to see them live). The
benchmark criteria (6-9) train the full pipeline on the default desk-scale
configuration over three seeds and share artifacts through a module-scoped
workspace; expect the module to take over an hour on two CPU cores.
"""

import math
import time

import numpy as np
import pytest
import torch

from dadr.drl import (
    DRLConfig,
    DRLModel,
    DRLTrainConfig,
    ImageBatch,
    StyleCode,
    StylePrior,
    loss_adv,
    loss_latent,
    loss_recon,
    total_loss,
    train_drl,
)
from dadr.experiments import (
    Workspace,
    default_config,
    diversity_and_content,
    run_experiment1,
    run_experiment2,
    run_experiment3a,
    run_lower_bound,
    run_single_domain,
    run_upper_bound,
    to_image_batch,
)
from dadr.nn_core import AffineParams, adain, instance_norm
from dadr.seg import dice, seg_loss
from dadr.synthdata import DataConfig, PHASES, gen_dataset
from fdcheck import fd_grad_check
from test_drl_losses import StubModel
from test_drl_model import micro_config
from test_seg import count_dice_oracle

SEEDS = (0, 1, 2)


def note(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num:02d} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} ({name}): {detail}"


# -- shared benchmark artifacts ----------------------------------------------


@pytest.fixture(scope="module")
def ws(tmp_path_factory) -> Workspace:
    return Workspace(tmp_path_factory.mktemp("benchmark"))


@pytest.fixture(scope="module")
def table1(ws):
    """Criterion 6 runs: per seed, the lower bound, upper bound, and the
    adaptation experiment on the default benchmark."""
    results = {}
    t0 = time.perf_counter()
    for seed in SEEDS:
        lower = run_lower_bound(default_config("baseline-lower", seed), ws)
        upper = run_upper_bound(default_config("baseline-upper", seed), ws)
        adapted = run_experiment1(default_config("exp1-da", seed), ws)
        results[seed] = {"lower": lower, "upper": upper, "dadr": adapted}
    results["wall"] = time.perf_counter() - t0
    return results


class TestCriterion1:
    def test_adain_statistics(self):
        t0 = time.perf_counter()
        rng = torch.Generator().manual_seed(0)
        worst_mean = worst_std = 0.0
        for _ in range(100):
            b = int(torch.randint(1, 4, (1,), generator=rng))
            c = int(torch.randint(1, 6, (1,), generator=rng))
            s = int(torch.randint(4, 17, (1,), generator=rng))
            x = torch.randn(b, c, s, s, generator=rng) * 2 + 0.5
            gamma = torch.randn(c, generator=rng) * 1.5
            beta = torch.randn(c, generator=rng)
            out = adain(x, AffineParams(gamma, beta))
            mean = out.mean(dim=(2, 3))
            std = out.var(dim=(2, 3), unbiased=False).sqrt()
            worst_mean = max(worst_mean, float((mean - beta).abs().max()))
            worst_std = max(worst_std, float((std - gamma.abs()).abs().max()))
        x = torch.randn(2, 3, 8, 8, generator=rng)
        identity_exact = torch.equal(
            adain(x, AffineParams(torch.ones(3), torch.zeros(3))), instance_norm(x))
        elapsed = time.perf_counter() - t0
        ok = worst_mean < 1e-3 and worst_std < 1e-3 and identity_exact and elapsed < 10
        note(1, "adain-in-statistics", ok,
             f"mean err {worst_mean:.2e}, std err {worst_std:.2e}, "
             f"identity {identity_exact}, {elapsed:.1f}s")


class TestCriterion2:
    def test_gradient_checks(self):
        t0 = time.perf_counter()
        cfg = micro_config(image_size=8, base_channels=1, style_dim=2,
                           disc_channels=2, disc_layers=1)
        model = DRLModel(cfg, seed=1).double()
        g = torch.Generator().manual_seed(2)
        x1 = ImageBatch(torch.rand(2, 1, 8, 8, generator=g, dtype=torch.float64) * 2 - 1, 1)
        x2 = ImageBatch(torch.rand(2, 1, 8, 8, generator=g, dtype=torch.float64) * 2 - 1, 2)
        prior = StylePrior(2, torch.Generator().manual_seed(3))
        s1 = StyleCode(prior.sample(2).values.double())
        s2 = StyleCode(prior.sample(2).values.double())

        def composite():
            recon = loss_recon(model, x1, x2)
            adv_g, _ = loss_adv(model, x1, x2, s1, s2)
            return total_loss(recon, adv_g, loss_latent(model, x1, x2, s1, s2))

        worst_total = fd_grad_check(composite, [p for p in model.parameters()],
                                    max_coords=150, seed=4)

        logits = torch.randn(1, 1, 4, 4, generator=g, dtype=torch.float64, requires_grad=True)
        target = (torch.rand(1, 1, 4, 4, generator=g) > 0.5).double()
        worst_seg = fd_grad_check(lambda: seg_loss(logits, target), [logits])
        elapsed = time.perf_counter() - t0
        ok = worst_total < 1e-3 and worst_seg < 1e-3 and elapsed < 120
        note(2, "gradient-checks", ok,
             f"composite rel err {worst_total:.2e}, seg rel err {worst_seg:.2e}, {elapsed:.1f}s")


class TestCriterion3:
    def test_dice_oracle(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(5)
        mismatches = 0
        for _ in range(1000):
            density_a, density_b = rng.uniform(0, 1, size=2)
            a = (rng.random((8, 8)) < density_a).astype(np.uint8)
            b = (rng.random((8, 8)) < density_b).astype(np.uint8)
            if dice(a, b) != count_dice_oracle(a, b):
                mismatches += 1
        m = (rng.random((8, 8)) > 0.5).astype(np.uint8)
        identity = dice(m, m) == 1.0
        z = np.zeros((8, 8), dtype=np.uint8)
        both_empty = dice(z, z) == 1.0
        elapsed = time.perf_counter() - t0
        ok = mismatches == 0 and identity and both_empty and elapsed < 5
        note(3, "dice-oracle", ok,
             f"{mismatches}/1000 mismatches, identity {identity}, both-empty {both_empty}, "
             f"{elapsed:.1f}s")


class TestCriterion4:
    def test_loss_spot_values(self):
        total = float(total_loss(0.2, 0.5, 1.0))
        stub = StubModel(disc_real=0.5, disc_fake=0.5)
        g = torch.Generator().manual_seed(6)
        x1 = ImageBatch(torch.rand(2, 1, 16, 16, generator=g) * 2 - 1, 1)
        x2 = ImageBatch(torch.rand(2, 1, 16, 16, generator=g) * 2 - 1, 2)
        s = StyleCode(torch.zeros(2, 2))
        _, disc_both = loss_adv(stub, x1, x2, s, s)
        per_direction = float(disc_both) / 2
        ok = (abs(total - 10.1) < 1e-9
              and abs(per_direction - 2 * math.log(2)) < 1e-6)
        note(4, "loss-spot-values", ok,
             f"total(0.2,0.5,1.0)={total:.6f} (want 10.1), "
             f"per-direction D@0.5 objective {per_direction:.6f} (want {2 * math.log(2):.6f})")


class TestCriterion5:
    def test_convergence_smoke(self):
        t0 = time.perf_counter()
        data = DataConfig(scenes_domain2=10, domain_ratio=1.0, folds=2, paired_scenes=0)
        dataset = gen_dataset(data, seed=0)
        model = DRLModel(DRLConfig(), seed=0)
        cfg = DRLTrainConfig(steps=500, seed=0)
        _, reports = train_drl(model, dataset.select(domain=1), dataset.select(domain=2), cfg)
        first = reports[0].recon
        tail = float(np.mean([r.recon for r in reports[-10:]]))
        finite = all(np.isfinite([r.recon, r.adv_g, r.adv_d, r.latent, r.total])
                     for r in reports)
        elapsed = time.perf_counter() - t0
        ok = tail <= 0.5 * first and finite and elapsed < 900
        note(5, "convergence-smoke", ok,
             f"recon step1 {first:.4f} -> last-10 mean {tail:.4f} "
             f"({100 * (1 - tail / first):.0f}% drop), finite {finite}, {elapsed / 60:.1f} min")


class TestCriterion6:
    def test_table1_ordering(self, table1):
        lines = []
        ok = True
        for seed in SEEDS:
            lower = table1[seed]["lower"].mean_dice
            upper = table1[seed]["upper"].mean_dice
            dadr = table1[seed]["dadr"].mean_dice
            seed_ok = (lower <= 0.5 and dadr >= lower + 0.15 and dadr >= 0.75
                       and upper >= 0.9 and lower < dadr <= upper)
            ok = ok and seed_ok
            lines.append(f"seed {seed}: {lower:.3f} < {dadr:.3f} <= {upper:.3f}"
                         f"{'' if seed_ok else '  <-- VIOLATED'}")
        wall = table1["wall"]
        ok = ok and wall < 7200
        note(6, "table1-ordering", ok, "; ".join(lines) + f"; {wall / 60:.0f} min")


class TestCriterion7:
    def test_table2_ordering(self, ws, table1):
        lines = []
        ok = True
        for seed in SEEDS:
            cfg = default_config("exp2-joint", seed)
            joint_d1, joint_d2 = run_experiment2(cfg, ws)
            single_d1 = run_single_domain(cfg, ws, 1)
            single_d2 = run_single_domain(cfg, ws, 2)
            d1_ok = joint_d1.mean_dice >= single_d1.mean_dice - 0.02
            d2_ok = joint_d2.mean_dice >= single_d2.mean_dice - 0.02
            ok = ok and d1_ok and d2_ok
            lines.append(
                f"seed {seed}: joint d1 {joint_d1.mean_dice:.3f} vs {single_d1.mean_dice:.3f}, "
                f"joint d2 {joint_d2.mean_dice:.3f} vs {single_d2.mean_dice:.3f}"
                f"{'' if d1_ok and d2_ok else '  <-- VIOLATED'}")
        note(7, "table2-joint", ok, "; ".join(lines))


class TestCriterion8:
    def test_table3_multiphase_robustness(self, ws, table1):
        single_phase = table1[0]["dadr"].mean_dice
        records = run_experiment3a(default_config("exp3a-multimodal", 0), ws)
        pooled = records[0].mean_dice
        phases = {r.phase: r.mean_dice for r in records[1:]}
        ok = pooled >= single_phase - 0.1 and set(phases) == set(PHASES)
        note(8, "table3-multiphase", ok,
             f"multi-phase {pooled:.3f} vs single-phase {single_phase:.3f} (slack 0.1); "
             + ", ".join(f"{p}={v:.3f}" for p, v in phases.items()))


class TestCriterion9:
    def test_diversity_and_content_preservation(self, ws, table1):
        cfg = default_config("exp1-da", 0)
        path = ws.drl_dir(cfg) / "checkpoint.ckpt"
        model, _, step, _ = DRLModel.load(path)
        dataset = gen_dataset(cfg.data, seed=cfg.seed)
        source = to_image_batch(dataset.select(domain=1, folds=[cfg.test_fold])[:1])
        prior = StylePrior(cfg.model.style_dim, torch.Generator().manual_seed(7))
        _, diversity, content_l1 = diversity_and_content(model, source, 5, prior)
        ok = diversity > 0.01 and content_l1 < 0.1
        note(9, "style-diversity", ok,
             f"checkpoint step {step}: pairwise L1 {diversity:.4f} (> 0.01), "
             f"content round-trip L1 {content_l1:.4f} (< 0.1)")


class TestCriterion10:
    def test_determinism_and_persistence(self, tmp_path):
        cfg0 = default_config("baseline-lower", 0)
        blobs = []
        for name in ("a", "b"):
            w = Workspace(tmp_path / name)
            run_lower_bound(default_config("baseline-lower", 0), w)
            blobs.append(w.records_path(cfg0).read_bytes())
        records_identical = blobs[0] == blobs[1]

        data = DataConfig(scenes_domain2=4, domain_ratio=1.0, folds=2, paired_scenes=0)
        dataset = gen_dataset(data, seed=0)
        model = DRLModel(DRLConfig(), seed=0)
        trainer, _ = train_drl(model, dataset.select(domain=1), dataset.select(domain=2),
                               DRLTrainConfig(steps=30, seed=0))
        path = tmp_path / "drl.ckpt"
        trainer.save(path)
        loaded, _, _, _ = DRLModel.load(path)
        x = to_image_batch(dataset.select(domain=1)[:2])
        bit_identical = torch.equal(model.content_only(x).pixels,
                                    loaded.content_only(x).pixels)
        s = model.encode_style(x)
        bit_identical = bit_identical and torch.equal(
            model.decode(model.encode_content(x), s, 1).pixels,
            loaded.decode(loaded.encode_content(x), s, 1).pixels)
        ok = records_identical and bit_identical
        note(10, "determinism-persistence", ok,
             f"records byte-identical {records_identical}, "
             f"checkpoint forward bit-identical {bit_identical}")
