"""Experiment orchestration: baselines, adaptation, joint-domain learning,
and the multi-phase target variant, with artifact caching per config hash.

Training phases run inside the dataset's mask-read audit; the adaptation
experiments assert afterwards that no target-domain mask was touched.
"""

import hashlib
import json
import time
from pathlib import Path

import numpy as np
import torch

from ..drl import DRLModel, ImageBatch, train_drl
from ..errors import ConfigError
from ..records import append_record, write_records
from ..seg import build_unet, evaluate_dice, load_unet, save_unet, seg_train
from ..synthdata import Dataset, SampleItem, gen_dataset, load_dataset, save_dataset
from .config import ExperimentConfig
from .records import CLINICAL_REFERENCE_DSC, MetricsRecord


def _key(payload: dict) -> str:
    return hashlib.sha1(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:10]


class Workspace:
    """Results directory: datasets, checkpoints, records, montages."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def dataset_dir(self, cfg: ExperimentConfig) -> Path:
        return self.root / "datasets" / _key({"data": cfg.data.to_dict(), "seed": cfg.seed})

    def drl_dir(self, cfg: ExperimentConfig) -> Path:
        payload = {
            "data": cfg.data.to_dict(), "seed": cfg.seed, "test_fold": cfg.test_fold,
            "model": cfg.model.to_dict(),
            "train": {**cfg.drl.__dict__, "weights": cfg.drl.weights.__dict__},
            "retrain": bool(cfg.retrain_drl),
        }
        return self.root / "drl" / _key(payload)

    def seg_path(self, name: str, payload: dict) -> Path:
        return self.root / "seg" / f"{name}-{_key(payload)}.ckpt"

    def records_path(self, cfg: ExperimentConfig) -> Path:
        return self.root / "records" / f"{cfg.experiment}-seed{cfg.seed}-fold{cfg.test_fold}.jsonl"

    def timing_path(self) -> Path:
        return self.root / "records" / "timing.jsonl"

    def montage_dir(self) -> Path:
        return self.root / "montage"

    def echo_config(self, cfg: ExperimentConfig) -> None:
        path = self.root / "configs" / f"{cfg.experiment}-seed{cfg.seed}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# shared pieces


def to_image_batch(items: list[SampleItem], domain: int | None = None) -> ImageBatch:
    if not items:
        raise ConfigError("empty item list")
    domain = items[0].domain if domain is None else domain
    pixels = torch.from_numpy(np.stack([it.image for it in items])).float()
    return ImageBatch(pixels=pixels, domain=domain,
                      scene_ids=[it.scene_id for it in items])


def content_only_items(model: DRLModel, items: list[SampleItem],
                       batch_size: int = 16) -> list[SampleItem]:
    """Re-render items through the canonical content-only path; masks, folds
    and provenance carry over untouched."""
    out = []
    with torch.no_grad():
        for start in range(0, len(items), batch_size):
            chunk = items[start : start + batch_size]
            rendered = model.content_only(to_image_batch(chunk))
            for it, px in zip(chunk, rendered.pixels):
                out.append(SampleItem(
                    image=px.numpy(), mask_data=it.mask, scene_id=it.scene_id,
                    domain=it.domain, phase=it.phase, fold=it.fold,
                    paired=it.paired, audit=it.audit,
                ))
    return out


def prepare_dataset(cfg: ExperimentConfig, ws: Workspace) -> Dataset:
    path = ws.dataset_dir(cfg)
    if (path / "manifest.jsonl").exists():
        return load_dataset(path)
    dataset = gen_dataset(cfg.data, seed=cfg.seed)
    save_dataset(dataset, path)
    return dataset


def prepare_drl(cfg: ExperimentConfig, ws: Workspace, dataset: Dataset) -> DRLModel:
    """Train (or load) the representation model on the train folds of both
    domains. Only images are consumed; labels never enter this stage."""
    path = ws.drl_dir(cfg) / "checkpoint.ckpt"
    if path.exists():
        model, _, _, _ = DRLModel.load(path)
        return model
    folds = dataset.train_folds(cfg.test_fold)
    d1 = dataset.select(domain=1, folds=folds)
    d2 = dataset.select(domain=2, folds=folds)
    model = DRLModel(cfg.model, seed=cfg.seed + 1000 * int(cfg.retrain_drl))
    train_cfg = cfg.drl
    if cfg.retrain_drl:
        train_cfg = type(train_cfg)(**{**train_cfg.__dict__, "seed": cfg.seed + 1000})
    trainer, _ = train_drl(model, d1, d2, train_cfg,
                           records_path=path.parent / "losses.jsonl")
    trainer.save(path, extra_config={"experiment": {"seed": cfg.seed,
                                                    "test_fold": cfg.test_fold}})
    return model


def _seg_cached(ws: Workspace, name: str, payload: dict, items, seg_cfg):
    path = ws.seg_path(name, payload)
    if path.exists():
        model, _ = load_unet(path)
        return model
    model = build_unet(seg_cfg)
    seg_train(model, items, seg_cfg)
    save_unet(model, path, {"cache": payload})
    return model


def _raw_segmenter(cfg: ExperimentConfig, ws: Workspace, dataset: Dataset, domain: int):
    folds = dataset.train_folds(cfg.test_fold)
    items = dataset.select(domain=domain, folds=folds)
    payload = {"data": cfg.data.to_dict(), "seed": cfg.seed, "fold": cfg.test_fold,
               "seg": cfg.seg.__dict__, "train_on": f"raw-d{domain}"}
    return _seg_cached(ws, f"raw-d{domain}", payload, items, cfg.seg)


def content_statistics(model: DRLModel, dataset: Dataset, fold: int) -> dict:
    """Mean/std of content codes per domain: a proxy report for how well the
    two code distributions align. Reported, never asserted."""
    stats = {}
    with torch.no_grad():
        for domain in (1, 2):
            items = dataset.select(domain=domain, folds=[fold])
            code = model.encode_content(to_image_batch(items)).features
            stats[f"domain{domain}"] = {"mean": round(float(code.mean()), 6),
                                        "std": round(float(code.std()), 6)}
    return stats


def _persist(ws: Workspace, cfg: ExperimentConfig, records: list[MetricsRecord]) -> None:
    ws.echo_config(cfg)
    write_records(ws.records_path(cfg), [r.to_dict() for r in records])
    for r in records:
        append_record(ws.timing_path(), r.timing_dict())


# ---------------------------------------------------------------------------
# runs


def run_lower_bound(cfg: ExperimentConfig, ws: Workspace) -> MetricsRecord:
    """Segmenter trained on raw domain-1 images, evaluated on raw domain-2:
    the no-adaptation baseline that exposes the domain gap."""
    t0 = time.perf_counter()
    dataset = prepare_dataset(cfg, ws)
    with dataset.audit:
        model = _raw_segmenter(cfg, ws, dataset, domain=1)
    leak = dataset.audit.reads(2)
    if leak:
        raise ConfigError(f"no-adaptation baseline read {leak} domain-2 masks during training")
    test = dataset.select(domain=2, folds=[cfg.test_fold])
    scores = evaluate_dice(model, test, cfg.seg.threshold)
    record = MetricsRecord("baseline-lower", "unet-no-da", cfg.test_fold, 2, scores,
                           seed=cfg.seed, wall_clock=time.perf_counter() - t0,
                           clinical_reference=CLINICAL_REFERENCE_DSC["unet-no-da"],
                           extras={"audit_domain2_mask_reads": leak})
    _persist(ws, cfg, [record])
    return record


def run_upper_bound(cfg: ExperimentConfig, ws: Workspace) -> MetricsRecord:
    """Segmenter trained and evaluated on raw domain-2 (labels allowed)."""
    t0 = time.perf_counter()
    dataset = prepare_dataset(cfg, ws)
    model = _raw_segmenter(cfg, ws, dataset, domain=2)
    test = dataset.select(domain=2, folds=[cfg.test_fold])
    scores = evaluate_dice(model, test, cfg.seg.threshold)
    record = MetricsRecord("baseline-upper", "unet-supervised", cfg.test_fold, 2, scores,
                           seed=cfg.seed, wall_clock=time.perf_counter() - t0,
                           clinical_reference=CLINICAL_REFERENCE_DSC["supervised-d2"])
    _persist(ws, cfg, [record])
    return record


def run_single_domain(cfg: ExperimentConfig, ws: Workspace, domain: int) -> MetricsRecord:
    """Supervised raw segmenter evaluated on its own domain's test fold."""
    t0 = time.perf_counter()
    dataset = prepare_dataset(cfg, ws)
    model = _raw_segmenter(cfg, ws, dataset, domain=domain)
    test = dataset.select(domain=domain, folds=[cfg.test_fold])
    scores = evaluate_dice(model, test, cfg.seg.threshold)
    return MetricsRecord(cfg.experiment, f"supervised-d{domain}", cfg.test_fold, domain,
                         scores, seed=cfg.seed, wall_clock=time.perf_counter() - t0,
                         clinical_reference=CLINICAL_REFERENCE_DSC[f"supervised-d{domain}"])


def _dadr_segmenter(cfg: ExperimentConfig, ws: Workspace, dataset: Dataset,
                    drl: DRLModel, name: str):
    folds = dataset.train_folds(cfg.test_fold)
    train_items = content_only_items(drl, dataset.select(domain=1, folds=folds))
    payload = {"data": cfg.data.to_dict(), "seed": cfg.seed, "fold": cfg.test_fold,
               "seg": cfg.seg.__dict__, "drl": str(ws.drl_dir(cfg).name), "train_on": name}
    return _seg_cached(ws, name, payload, train_items, cfg.seg)


def run_experiment1(cfg: ExperimentConfig, ws: Workspace) -> MetricsRecord:
    """Adaptation: representation learning on unlabeled images of both domains,
    segmentation trained on content-only domain-1, evaluated on content-only
    domain-2. Domain-2 masks are provably untouched during training."""
    t0 = time.perf_counter()
    dataset = prepare_dataset(cfg, ws)
    with dataset.audit:
        drl = prepare_drl(cfg, ws, dataset)
        seg_model = _dadr_segmenter(cfg, ws, dataset, drl, "dadr")
    leak = dataset.audit.reads(2)
    if leak:
        raise ConfigError(f"adaptation training read {leak} domain-2 masks")
    test = content_only_items(drl, dataset.select(domain=2, folds=[cfg.test_fold]))
    scores = evaluate_dice(seg_model, test, cfg.seg.threshold)
    record = MetricsRecord(cfg.experiment, "dadr", cfg.test_fold, 2, scores,
                           seed=cfg.seed, wall_clock=time.perf_counter() - t0,
                           clinical_reference=CLINICAL_REFERENCE_DSC["dadr"],
                           extras={"audit_domain2_mask_reads": leak,
                                   "content_stats": content_statistics(drl, dataset, cfg.test_fold)})
    _persist(ws, cfg, [record])
    return record


def run_experiment2(cfg: ExperimentConfig, ws: Workspace) -> tuple[MetricsRecord, MetricsRecord]:
    """Joint-domain learning: one segmenter on content-only images of both
    domains (labels allowed on both), evaluated on each domain's test fold.
    Raw supervised single-domain models are recorded alongside for comparison."""
    t0 = time.perf_counter()
    dataset = prepare_dataset(cfg, ws)
    drl = prepare_drl(cfg, ws, dataset)
    folds = dataset.train_folds(cfg.test_fold)
    train_items = (content_only_items(drl, dataset.select(domain=1, folds=folds))
                   + content_only_items(drl, dataset.select(domain=2, folds=folds)))
    payload = {"data": cfg.data.to_dict(), "seed": cfg.seed, "fold": cfg.test_fold,
               "seg": cfg.seg.__dict__, "drl": str(ws.drl_dir(cfg).name), "train_on": "joint"}
    model = _seg_cached(ws, "joint", payload, train_items, cfg.seg)

    joint_records = []
    for domain in (1, 2):
        test = content_only_items(drl, dataset.select(domain=domain, folds=[cfg.test_fold]))
        scores = evaluate_dice(model, test, cfg.seg.threshold)
        joint_records.append(MetricsRecord(
            cfg.experiment, "joint-content", cfg.test_fold, domain, scores,
            seed=cfg.seed, wall_clock=time.perf_counter() - t0,
            clinical_reference=CLINICAL_REFERENCE_DSC[f"joint-d{domain}"]))
    singles = [run_single_domain(cfg, ws, domain) for domain in (1, 2)]
    _persist(ws, cfg, joint_records + singles)
    return joint_records[0], joint_records[1]


def run_experiment3a(cfg: ExperimentConfig, ws: Workspace) -> list[MetricsRecord]:
    """Adaptation against the multi-phase domain 2; Dice pooled and per phase."""
    t0 = time.perf_counter()
    dataset = prepare_dataset(cfg, ws)
    with dataset.audit:
        drl = prepare_drl(cfg, ws, dataset)
        seg_model = _dadr_segmenter(cfg, ws, dataset, drl, "dadr-multiphase")
    leak = dataset.audit.reads(2)
    if leak:
        raise ConfigError(f"adaptation training read {leak} domain-2 masks")
    test_raw = dataset.select(domain=2, folds=[cfg.test_fold])
    test = content_only_items(drl, test_raw)
    records = [MetricsRecord(
        cfg.experiment, "dadr-multiphase", cfg.test_fold, 2,
        evaluate_dice(seg_model, test, cfg.seg.threshold),
        seed=cfg.seed, wall_clock=time.perf_counter() - t0,
        clinical_reference=CLINICAL_REFERENCE_DSC["dadr-multiphase"],
        extras={"audit_domain2_mask_reads": leak})]
    for phase in cfg.data.phases_domain2:
        sub = [it for it in test if it.phase == phase]
        records.append(MetricsRecord(
            cfg.experiment, "dadr-multiphase", cfg.test_fold, 2,
            evaluate_dice(seg_model, sub, cfg.seg.threshold), phase=phase,
            seed=cfg.seed, wall_clock=time.perf_counter() - t0))
    _persist(ws, cfg, records)
    return records


def run_experiment(cfg: ExperimentConfig, ws: Workspace):
    """Dispatch a run by its experiment id."""
    from .transfer import run_experiment3b

    dispatch = {
        "baseline-lower": run_lower_bound,
        "baseline-upper": run_upper_bound,
        "exp1-da": run_experiment1,
        "exp2-joint": run_experiment2,
        "exp3a-multimodal": run_experiment3a,
        "exp3b-diverse": run_experiment3b,
    }
    return dispatch[cfg.experiment](cfg, ws)


def kfold_split(dataset: Dataset, k: int, seed: int) -> dict[int, int]:
    """Partition scene ids into k folds (sizes within 1), seeded."""
    scenes = sorted({it.scene_id for it in dataset.items if not it.paired})
    if len(scenes) < k:
        raise ConfigError(f"need at least {k} scenes for {k} folds, have {len(scenes)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(scenes))
    return {scenes[idx]: pos % k for pos, idx in enumerate(order)}
