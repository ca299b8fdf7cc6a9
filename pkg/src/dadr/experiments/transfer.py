"""Diverse style transfer: prior-sampled and reference-guided translations of
domain-1 test images, with diversity/content-preservation metrics and montages."""

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from ..drl import DRLModel, ImageBatch, StylePrior
from ..records import append_record, write_records
from .config import ExperimentConfig
from .runner import Workspace, prepare_dataset, prepare_drl, to_image_batch


@dataclass
class TransferReport:
    experiment: str
    seed: int
    k: int
    per_source: list[dict] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def mean_diversity(self) -> float:
        return float(np.mean([s["diversity_l1"] for s in self.per_source]))

    @property
    def mean_content_l1(self) -> float:
        return float(np.mean([s["content_l1"] for s in self.per_source]))

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "k": self.k,
                "mean_diversity_l1": self.mean_diversity,
                "mean_content_l1": self.mean_content_l1,
                "per_source": self.per_source}


def diversity_and_content(model: DRLModel, src: ImageBatch, k: int,
                          prior: StylePrior) -> tuple[list[ImageBatch], float, float]:
    """k prior-styled translations of src: mean pairwise L1 between outputs and
    mean L1 between each output's re-encoded content and the source content."""
    target = 2 if src.domain == 1 else 1
    with torch.no_grad():
        source_content = model.encode_content(src).features
        outs = [model.translate(src, target, prior.sample(len(src))) for _ in range(k)]
        pair_l1 = [float((outs[i].pixels - outs[j].pixels).abs().mean())
                   for i in range(k) for j in range(i + 1, k)]
        content_l1 = [float((model.encode_content(o).features - source_content).abs().mean())
                      for o in outs]
    return outs, float(np.mean(pair_l1)), float(np.mean(content_l1))


def _to_u8(pixels: torch.Tensor) -> np.ndarray:
    return np.round((pixels[0].numpy() + 1.0) / 2.0 * 255.0).astype(np.uint8)


def save_montage(path: Path, panels: list[torch.Tensor], gap: int = 2) -> None:
    """One row of equally sized grayscale panels separated by white gaps."""
    arrays = [_to_u8(p) for p in panels]
    h = arrays[0].shape[0]
    w = sum(a.shape[1] for a in arrays) + gap * (len(arrays) - 1)
    canvas = np.full((h, w), 255, dtype=np.uint8)
    x = 0
    for a in arrays:
        canvas[:, x : x + a.shape[1]] = a
        x += a.shape[1] + gap
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(canvas, mode="L").save(path)


def run_experiment3b(cfg: ExperimentConfig, ws: Workspace) -> TransferReport:
    """For each selected domain-1 test image: k prior-sampled translations plus
    one reference-guided translation per contrast phase; montage has
    1 + k + len(phases) panels."""
    t0 = time.perf_counter()
    dataset = prepare_dataset(cfg, ws)
    model = prepare_drl(cfg, ws, dataset)
    k = cfg.transfer_samples
    prior = StylePrior(cfg.model.style_dim, torch.Generator().manual_seed(cfg.seed))

    sources = dataset.select(domain=1, folds=[cfg.test_fold])[: cfg.transfer_sources]
    phase_refs = {}
    for phase in cfg.data.phases_domain2:
        refs = dataset.select(domain=2, folds=[cfg.test_fold], phases=[phase])
        if refs:
            phase_refs[phase] = to_image_batch(refs[:1])

    report = TransferReport(experiment=cfg.experiment, seed=cfg.seed, k=k)
    for item in sources:
        src = to_image_batch([item])
        outs, diversity, content_l1 = diversity_and_content(model, src, k, prior)
        panels = [src.pixels[0]] + [o.pixels[0] for o in outs]
        ref_l1 = {}
        with torch.no_grad():
            for phase, ref in phase_refs.items():
                guided = model.style_transfer(src, ref)
                panels.append(guided.pixels[0])
                ref_l1[phase] = float((guided.pixels - src.pixels).abs().mean())
        montage_path = ws.montage_dir() / cfg.experiment / f"scene_{item.scene_id:05d}.png"
        save_montage(montage_path, panels)
        report.per_source.append({
            "scene_id": item.scene_id,
            "diversity_l1": diversity,
            "content_l1": content_l1,
            "reference_l1": ref_l1,
            "montage": str(montage_path.relative_to(ws.root)),
            "panels": len(panels),
        })
    report.wall_clock = time.perf_counter() - t0

    ws.echo_config(cfg)
    write_records(ws.records_path(cfg), [report.to_dict()])
    append_record(ws.timing_path(), {"experiment": cfg.experiment, "seed": cfg.seed,
                                     "wall_clock": report.wall_clock})
    return report
