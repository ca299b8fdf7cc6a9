"""Two-domain benchmark datasets: generation, fold assignment, persistence.

Domains are unpaired by construction (disjoint scene ids) except for an
optional paired evaluation subset, which is flagged on every item and kept
out of all fold-based selections.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ConfigError
from ..records import read_records, write_records
from .scenes import Scene, gen_scene
from .styles import PHASES, default_style, jitter_style, render

MASK_AUDIT_TRAINING = "training"


@dataclass
class DataConfig:
    image_size: int = 64
    scenes_domain2: int = 16
    domain_ratio: float = 6.5
    folds: int = 3
    paired_scenes: int = 8
    phases_domain2: tuple[str, ...] = ("pre",)
    style_jitter: float = 1.0
    domain_gap_margin: float = 0.3

    def __post_init__(self):
        self.phases_domain2 = tuple(self.phases_domain2)
        if self.image_size < 32 or self.image_size & (self.image_size - 1):
            raise ConfigError(f"image_size must be a power of two >= 32, got {self.image_size}")
        if self.folds < 1:
            raise ConfigError(f"folds must be >= 1, got {self.folds}")
        if self.scenes_domain2 < self.folds:
            raise ConfigError(f"need >= {self.folds} domain-2 scenes for {self.folds} folds")
        if self.scenes_domain1 < self.folds:
            raise ConfigError("domain_ratio too small: fewer domain-1 scenes than folds")
        if not self.phases_domain2 or any(p not in PHASES for p in self.phases_domain2):
            raise ConfigError(f"phases_domain2 must be drawn from {PHASES}, got {self.phases_domain2}")
        if self.paired_scenes < 0:
            raise ConfigError("paired_scenes must be >= 0")

    @property
    def scenes_domain1(self) -> int:
        return int(round(self.domain_ratio * self.scenes_domain2))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["phases_domain2"] = list(self.phases_domain2)
        return d


class MaskAudit:
    """Counts ground-truth mask reads per domain while a phase label is set.

    Experiment runners set the phase to "training" around training code and
    assert afterwards that no target-domain mask was touched.
    """

    def __init__(self):
        self.phase = None
        self.counts: dict[tuple[str, int], int] = {}

    def record(self, domain: int) -> None:
        if self.phase is not None:
            key = (self.phase, domain)
            self.counts[key] = self.counts.get(key, 0) + 1

    def reads(self, domain: int, phase: str = MASK_AUDIT_TRAINING) -> int:
        return self.counts.get((phase, domain), 0)

    def __enter__(self):
        self.phase = MASK_AUDIT_TRAINING
        return self

    def __exit__(self, *exc):
        self.phase = None
        return False


@dataclass
class SampleItem:
    image: np.ndarray = field(repr=False)
    mask_data: np.ndarray = field(repr=False)
    scene_id: int = 0
    domain: int = 1
    phase: str = "none"
    fold: int = 0
    paired: bool = False
    audit: MaskAudit | None = field(default=None, repr=False, compare=False)

    @property
    def mask(self) -> np.ndarray:
        if self.audit is not None:
            self.audit.record(self.domain)
        return self.mask_data


@dataclass
class Dataset:
    config: DataConfig
    seed: int
    items: list[SampleItem]
    audit: MaskAudit

    def select(self, domain: int | None = None, folds=None, phases=None,
               paired: bool = False) -> list[SampleItem]:
        """Items filtered by domain/folds/phases; paired items only on request."""
        folds = set(folds) if folds is not None else None
        phases = set(phases) if phases is not None else None
        out = []
        for it in self.items:
            if it.paired != paired:
                continue
            if domain is not None and it.domain != domain:
                continue
            if folds is not None and it.fold not in folds:
                continue
            if phases is not None and it.phase not in phases:
                continue
            out.append(it)
        return out

    def fold_ids(self) -> list[int]:
        return sorted({it.fold for it in self.items if not it.paired})

    def train_folds(self, test_fold: int) -> list[int]:
        ids = self.fold_ids()
        if test_fold not in ids:
            raise ConfigError(f"test fold {test_fold} not in {ids}")
        return [f for f in ids if f != test_fold]


def _fold_assignment(n: int, folds: int, rng: np.random.Generator) -> list[int]:
    order = rng.permutation(n)
    assignment = [0] * n
    for pos, idx in enumerate(order):
        assignment[idx] = pos % folds
    return assignment


def validate_domain_gap(config: DataConfig) -> None:
    """The organ-vs-background contrast gap must differ between domains by the
    configured margin, including under worst-case per-item jitter."""
    shrink = 1 - 0.08 * config.style_jitter
    gap1 = default_style(1).contrast_gap() * shrink
    for phase in config.phases_domain2:
        gap2 = default_style(2, phase).contrast_gap() * shrink
        if abs(gap1 - gap2) < config.domain_gap_margin:
            raise ConfigError(
                f"domain styles too similar for phase {phase!r}: "
                f"|{gap1:.3f} - {gap2:.3f}| < margin {config.domain_gap_margin}"
            )


def gen_dataset(config: DataConfig, seed: int) -> Dataset:
    """Deterministically generate the benchmark dataset for (config, seed)."""
    validate_domain_gap(config)
    audit = MaskAudit()
    root = np.random.SeedSequence(seed)
    ss_folds, ss_d1, ss_d2, ss_paired = root.spawn(4)

    fold_rng = np.random.default_rng(ss_folds)
    items: list[SampleItem] = []
    next_scene_id = 0

    def build_items(scene_seq, count, domain, phases, folds_for, paired):
        nonlocal next_scene_id
        children = scene_seq.spawn(count)
        for i in range(count):
            geom_rng, style_rng = (np.random.default_rng(s) for s in children[i].spawn(2))
            scene = gen_scene(geom_rng, scene_id=next_scene_id, image_size=config.image_size)
            next_scene_id += 1
            for phase in phases:
                style = jitter_style(default_style(domain, phase), style_rng, config.style_jitter)
                image, mask = render(scene, style, style_rng, config.image_size)
                items.append(SampleItem(
                    image=image, mask_data=mask, scene_id=scene.scene_id,
                    domain=domain, phase=style.phase, fold=folds_for[i],
                    paired=paired, audit=audit,
                ))

    folds_d1 = _fold_assignment(config.scenes_domain1, config.folds, fold_rng)
    folds_d2 = _fold_assignment(config.scenes_domain2, config.folds, fold_rng)
    build_items(ss_d1, config.scenes_domain1, 1, ("none",), folds_d1, paired=False)
    build_items(ss_d2, config.scenes_domain2, 2, config.phases_domain2, folds_d2, paired=False)

    # paired subset: same scene rendered in both domains, quarantined (fold -1)
    paired_children = ss_paired.spawn(config.paired_scenes)
    for i in range(config.paired_scenes):
        geom_rng, style_rng = (np.random.default_rng(s) for s in paired_children[i].spawn(2))
        scene = gen_scene(geom_rng, scene_id=next_scene_id, image_size=config.image_size)
        next_scene_id += 1
        for domain in (1, 2):
            phase = "none" if domain == 1 else config.phases_domain2[0]
            style = jitter_style(default_style(domain, phase), style_rng, config.style_jitter)
            image, mask = render(scene, style, style_rng, config.image_size)
            items.append(SampleItem(
                image=image, mask_data=mask, scene_id=scene.scene_id,
                domain=domain, phase=style.phase, fold=-1, paired=True, audit=audit,
            ))

    return Dataset(config=config, seed=seed, items=items, audit=audit)


# ---------------------------------------------------------------------------
# Persistence: lossless single-channel files plus a JSONL manifest


def _image_to_u16(image: np.ndarray) -> np.ndarray:
    return np.round((image[0].astype(np.float64) + 1.0) / 2.0 * 65535.0).astype(np.uint16)


def _u16_to_image(arr: np.ndarray) -> np.ndarray:
    return (arr.astype(np.float32) / 65535.0 * 2.0 - 1.0)[None]


def save_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    manifest = []
    for it in dataset.items:
        stem = f"{it.scene_id:05d}_d{it.domain}_{it.phase}"
        image_rel = f"images/{stem}.png"
        mask_rel = f"masks/{stem}.png"
        Image.fromarray(_image_to_u16(it.image)).save(out_dir / image_rel)
        Image.fromarray((it.mask_data * 255).astype(np.uint8), mode="L").save(out_dir / mask_rel)
        manifest.append({
            "image": image_rel, "mask": mask_rel, "scene_id": it.scene_id,
            "domain": it.domain, "phase": it.phase, "fold": it.fold, "paired": it.paired,
        })
    write_records(out_dir / "manifest.jsonl", manifest)
    with open(out_dir / "config.json", "w") as f:
        json.dump({"config": dataset.config.to_dict(), "seed": dataset.seed}, f,
                  sort_keys=True, indent=2)
    return out_dir


def load_dataset(in_dir: str | Path) -> Dataset:
    in_dir = Path(in_dir)
    with open(in_dir / "config.json") as f:
        meta = json.load(f)
    config = DataConfig(**meta["config"])
    audit = MaskAudit()
    items = []
    for rec in read_records(in_dir / "manifest.jsonl"):
        image = _u16_to_image(np.array(Image.open(in_dir / rec["image"]), dtype=np.uint16))
        mask = (np.array(Image.open(in_dir / rec["mask"]), dtype=np.uint8) > 127).astype(np.uint8)
        items.append(SampleItem(
            image=image, mask_data=mask, scene_id=rec["scene_id"], domain=rec["domain"],
            phase=rec["phase"], fold=rec["fold"], paired=rec["paired"], audit=audit,
        ))
    return Dataset(config=config, seed=meta["seed"], items=items, audit=audit)
