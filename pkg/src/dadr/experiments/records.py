"""Experiment metrics records and published clinical-scale reference values.

Records are persisted as line-delimited JSON. Timing is kept out of the
canonical record file so reruns with the same config and seed are
byte-identical; wall-clock goes to a sibling timing file.
"""

from dataclasses import dataclass, field

import numpy as np

# Clinical-scale DSC values reported for this method family (mean, std).
# They are context for the summary tables only: the synthetic benchmark does
# not reproduce them, and the CycleGAN-based comparator is not implemented.
CLINICAL_REFERENCE_DSC = {
    "unet-no-da": (0.26, 0.07),
    "dacgan": (0.72, 0.05),
    "dadr": (0.81, 0.03),
    "supervised-d1": (0.901, 0.020),
    "supervised-d2": (0.869, 0.044),
    "joint-d1": (0.912, 0.012),
    "joint-d2": (0.891, 0.040),
    "dacgan-multiphase": (0.52, 0.06),
    "dadr-multiphase": (0.74, 0.04),
}


@dataclass
class MetricsRecord:
    experiment: str
    method: str
    fold: int
    domain: int
    dice_scores: list[float]
    phase: str = "all"
    seed: int = 0
    wall_clock: float = 0.0
    clinical_reference: tuple[float, float] | None = None
    extras: dict = field(default_factory=dict)

    @property
    def mean_dice(self) -> float:
        return float(np.mean(self.dice_scores))

    @property
    def std_dice(self) -> float:
        return float(np.std(self.dice_scores))

    def to_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "method": self.method,
            "fold": self.fold,
            "domain": self.domain,
            "phase": self.phase,
            "seed": self.seed,
            "n": len(self.dice_scores),
            "mean_dice": self.mean_dice,
            "std_dice": self.std_dice,
            "dice_scores": [float(s) for s in self.dice_scores],
        }
        if self.clinical_reference is not None:
            d["clinical_reference"] = {
                "mean": self.clinical_reference[0],
                "std": self.clinical_reference[1],
                "note": "published clinical-scale value; not reproduced by this benchmark",
            }
        if self.extras:
            d["extras"] = self.extras
        return d

    def timing_dict(self) -> dict:
        return {"experiment": self.experiment, "method": self.method, "fold": self.fold,
                "domain": self.domain, "phase": self.phase, "seed": self.seed,
                "wall_clock": self.wall_clock}

    @staticmethod
    def check_consistent(record_dict: dict, tol: float = 1e-9) -> bool:
        """The stored mean must be recomputable from the per-image list."""
        scores = record_dict["dice_scores"]
        return (abs(record_dict["mean_dice"] - float(np.mean(scores))) <= tol
                and abs(record_dict["std_dice"] - float(np.std(scores))) <= tol)
