from .config import EXPERIMENT_IDS, ExperimentConfig, build_config, default_config
from .records import CLINICAL_REFERENCE_DSC, MetricsRecord
from .report import collect_records, write_summary_csv
from .runner import (
    Workspace,
    content_only_items,
    content_statistics,
    kfold_split,
    prepare_dataset,
    prepare_drl,
    run_experiment,
    run_experiment1,
    run_experiment2,
    run_experiment3a,
    run_lower_bound,
    run_single_domain,
    run_upper_bound,
    to_image_batch,
)
from .transfer import TransferReport, diversity_and_content, run_experiment3b, save_montage

__all__ = [
    "CLINICAL_REFERENCE_DSC", "EXPERIMENT_IDS", "ExperimentConfig", "MetricsRecord",
    "TransferReport", "Workspace", "build_config", "collect_records",
    "content_only_items", "content_statistics", "default_config",
    "diversity_and_content", "kfold_split", "prepare_dataset", "prepare_drl",
    "run_experiment", "run_experiment1", "run_experiment2", "run_experiment3a",
    "run_experiment3b", "run_lower_bound", "run_single_domain", "run_upper_bound",
    "save_montage", "to_image_batch", "write_summary_csv",
]
