"""Experiment configuration: one explicit seed, strict key validation."""

import dataclasses
from dataclasses import dataclass, field

from ..drl import DRLConfig, DRLTrainConfig
from ..errors import ConfigError
from ..seg import SegConfig
from ..synthdata import DataConfig, PHASES

EXPERIMENT_IDS = ("exp1-da", "exp2-joint", "exp3a-multimodal", "exp3b-diverse",
                  "baseline-lower", "baseline-upper")


def build_config(cls, data: dict, context: str = ""):
    """Construct a (possibly nested) config dataclass, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{context or cls.__name__}: expected a mapping, got {type(data).__name__}")
    field_map = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(field_map))
    if unknown:
        raise ConfigError(f"{context or cls.__name__}: unknown keys {unknown}")
    kwargs = {}
    for name, value in data.items():
        ftype = field_map[name].type
        if dataclasses.is_dataclass(ftype) and isinstance(value, dict):
            value = build_config(ftype, value, context=f"{context}{name}.")
        kwargs[name] = value
    return cls(**kwargs)


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs; the top-level seed governs the
    dataset, the representation training, and the segmentation training."""

    experiment: str
    seed: int = 0
    test_fold: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    model: DRLConfig = field(default_factory=DRLConfig)
    drl: DRLTrainConfig = field(default_factory=DRLTrainConfig)
    seg: SegConfig = field(default_factory=SegConfig)
    transfer_samples: int = 5
    transfer_sources: int = 4
    retrain_drl: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_IDS:
            raise ConfigError(f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENT_IDS}")
        if not 0 <= self.test_fold < self.data.folds:
            raise ConfigError(f"test_fold {self.test_fold} outside 0..{self.data.folds - 1}")
        sizes = {self.data.image_size, self.model.image_size, self.seg.image_size}
        if len(sizes) != 1:
            raise ConfigError(f"inconsistent image sizes across data/model/seg: {sorted(sizes)}")
        if self.experiment in ("exp3a-multimodal", "exp3b-diverse") and len(self.data.phases_domain2) < 2:
            raise ConfigError(f"{self.experiment} needs a multi-phase domain 2 "
                              f"(set data.phases_domain2, e.g. {list(PHASES)})")
        if self.transfer_samples < 2 or self.transfer_sources < 1:
            raise ConfigError("transfer_samples must be >= 2 and transfer_sources >= 1")
        # one seed to rule every stage
        self.drl.seed = self.seed
        self.seg.seed = self.seed

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["data"] = self.data.to_dict()
        return d


def default_config(experiment: str, seed: int = 0, **overrides) -> ExperimentConfig:
    """Benchmark defaults for an experiment id; multi-phase target for exp3*."""
    data_kw = {}
    if experiment in ("exp3a-multimodal", "exp3b-diverse"):
        data_kw["phases_domain2"] = PHASES
    cfg = ExperimentConfig(experiment=experiment, seed=seed, data=DataConfig(**data_kw))
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config field {key!r}")
        setattr(cfg, key, value)
    return cfg
