from .dataset import DataConfig, Dataset, MaskAudit, SampleItem, gen_dataset, load_dataset, save_dataset
from .scenes import Blob, Scene, gen_scene
from .styles import (
    PHASES,
    DomainStyle,
    default_style,
    domain1_style,
    domain2_style,
    jitter_style,
    render,
    smooth_field,
)

__all__ = [
    "Blob", "DataConfig", "Dataset", "DomainStyle", "MaskAudit", "PHASES",
    "SampleItem", "Scene", "default_style", "domain1_style", "domain2_style",
    "gen_dataset", "gen_scene", "jitter_style", "load_dataset", "render",
    "save_dataset", "smooth_field",
]
