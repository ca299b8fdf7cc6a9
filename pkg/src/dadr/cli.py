"""Command-line interface: dataset generation, training, experiment runs,
style transfer, and report aggregation.

Exit codes: 0 success, 2 configuration/usage error, 3 runtime or training
failure. The output root resolves as --output flag, then DADR_OUTPUT_ROOT,
then the config file's output_dir, then ./results.
"""

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np
import torch
import yaml
from PIL import Image

from . import __version__
from .drl import DRLModel, ImageBatch, StylePrior
from .errors import ConfigError, NonFiniteError, TrainingDiverged
from .experiments import (
    EXPERIMENT_IDS,
    ExperimentConfig,
    Workspace,
    build_config,
    prepare_dataset,
    prepare_drl,
    run_experiment,
    write_summary_csv,
)
from .seg import evaluate_dice, save_unet, seg_train, build_unet
from .synthdata import gen_dataset, save_dataset


def _load_config(path: str | None, experiment: str | None = None,
                 default_experiment: str | None = None) -> tuple[ExperimentConfig, str | None]:
    raw = {}
    if path:
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a mapping")
    output_dir = raw.pop("output_dir", None)
    if experiment is not None:
        raw["experiment"] = experiment
    raw.setdefault("experiment", default_experiment)
    if raw["experiment"] is None:
        raise ConfigError("no experiment selected (config key 'experiment' or command argument)")
    return build_config(ExperimentConfig, raw), output_dir


def _resolve_output(flag: str | None, config_dir: str | None) -> Path:
    return Path(flag or os.environ.get("DADR_OUTPUT_ROOT") or config_dir or "results")


def _fail_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except (TrainingDiverged, NonFiniteError) as exc:
            click.echo(f"training failure: {exc}", err=True)
            sys.exit(3)
        except (OSError, RuntimeError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Domain adaptation via disentangled representations, desk-scale benchmark."""


@main.command("gen-data")
@click.option("-c", "--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("-o", "--output", default=None, help="output root directory")
@_fail_codes
def cmd_gen_data(config_path, output):
    """Generate the synthetic two-domain dataset and its manifest."""
    cfg, config_out = _load_config(config_path, default_experiment="exp1-da")
    out = _resolve_output(output, config_out) / f"dataset-seed{cfg.seed}"
    dataset = gen_dataset(cfg.data, seed=cfg.seed)
    save_dataset(dataset, out)
    d1 = len(dataset.select(domain=1))
    d2 = len(dataset.select(domain=2))
    click.echo(f"dataset written to {out} ({d1} domain-1 / {d2} domain-2 items, "
               f"{len(dataset.items)} total)")


@main.command("train-drl")
@click.option("-c", "--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("-o", "--output", default=None)
@_fail_codes
def cmd_train_drl(config_path, output):
    """Train the disentangled representation model on the train folds."""
    cfg, config_out = _load_config(config_path, default_experiment="exp1-da")
    ws = Workspace(_resolve_output(output, config_out))
    dataset = prepare_dataset(cfg, ws)
    prepare_drl(cfg, ws, dataset)
    click.echo(f"representation checkpoint at {ws.drl_dir(cfg) / 'checkpoint.ckpt'}")


@main.command("train-seg")
@click.option("-c", "--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--domain", type=click.Choice(["1", "2"]), default="1", show_default=True,
              help="train a supervised segmenter on this domain's raw images")
@click.option("-o", "--output", default=None)
@_fail_codes
def cmd_train_seg(config_path, output, domain):
    """Train a supervised segmentation model on raw images of one domain."""
    cfg, config_out = _load_config(config_path, default_experiment="exp1-da")
    ws = Workspace(_resolve_output(output, config_out))
    dataset = prepare_dataset(cfg, ws)
    domain = int(domain)
    items = dataset.select(domain=domain, folds=dataset.train_folds(cfg.test_fold))
    model = build_unet(cfg.seg)
    result = seg_train(model, items, cfg.seg)
    path = ws.seg_path(f"raw-d{domain}", {"cli": True, "seed": cfg.seed})
    save_unet(model, path, {"seg": cfg.seg.__dict__})
    test = dataset.select(domain=domain, folds=[cfg.test_fold])
    mean_dice = float(np.mean(evaluate_dice(model, test, cfg.seg.threshold)))
    click.echo(f"segmenter at {path} (best val dice {result.best_val_dice:.3f}, "
               f"own-domain test dice {mean_dice:.3f})")


@main.command("run")
@click.argument("experiment", type=click.Choice(EXPERIMENT_IDS))
@click.option("-c", "--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("-o", "--output", default=None)
@click.option("--dry-run", is_flag=True, help="validate config and print the plan only")
@_fail_codes
def cmd_run(experiment, config_path, output, dry_run):
    """Run one experiment end to end and record its metrics."""
    if config_path:
        cfg, config_out = _load_config(config_path, experiment=experiment)
    else:
        from .experiments import default_config

        cfg, config_out = default_config(experiment), None
    root = _resolve_output(output, config_out)
    ws = Workspace(root)
    if dry_run:
        click.echo(f"experiment: {cfg.experiment} (seed {cfg.seed}, test fold {cfg.test_fold})")
        click.echo(f"dataset: {cfg.data.scenes_domain1}+{cfg.data.scenes_domain2} scenes, "
                   f"{cfg.data.folds} folds, phases {list(cfg.data.phases_domain2)}")
        click.echo(f"representation training: {cfg.drl.steps} steps, batch {cfg.drl.batch_size}")
        click.echo(f"segmentation training: {cfg.seg.epochs} epochs, batch {cfg.seg.batch_size}")
        click.echo(f"output root: {root}")
        return
    result = run_experiment(cfg, ws)
    write_summary_csv(ws.root)
    records = result if isinstance(result, (list, tuple)) else [result]
    for rec in records:
        if hasattr(rec, "mean_dice"):
            click.echo(f"{rec.experiment} [{rec.method}] domain {rec.domain} phase {rec.phase}: "
                       f"dice {rec.mean_dice:.3f} +/- {rec.std_dice:.3f} (n={len(rec.dice_scores)})")
        else:
            click.echo(f"{rec.experiment}: diversity {rec.mean_diversity:.4f}, "
                       f"content round-trip {rec.mean_content_l1:.4f}")
    click.echo(f"records under {ws.root / 'records'}; summary at {ws.root / 'summary.csv'}")


def _read_image(path: Path) -> torch.Tensor:
    img = Image.open(path)
    arr = np.array(img)
    if arr.dtype == np.uint16 or img.mode in ("I", "I;16"):
        values = arr.astype(np.float32) / 65535.0
    elif arr.dtype == np.uint8:
        values = arr.astype(np.float32) / 255.0
    else:
        raise ConfigError(f"{path}: unsupported image dtype {arr.dtype}")
    return torch.from_numpy(values * 2.0 - 1.0)[None, None]


def _write_image(path: Path, pixels: torch.Tensor) -> None:
    arr = np.round((pixels[0, 0].numpy() + 1.0) / 2.0 * 65535.0).astype(np.uint16)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)


@main.command("translate")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--image", "image_path", type=click.Path(exists=True), required=True)
@click.option("--target-domain", type=click.Choice(["1", "2"]), required=True)
@click.option("--style-ref", type=click.Path(exists=True), default=None,
              help="encode the style from this target-domain image")
@click.option("--samples", type=int, default=0, help="number of prior-sampled styles")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", default="translated")
@_fail_codes
def cmd_translate(checkpoint, image_path, target_domain, style_ref, samples, seed, output):
    """Translate one image into the other domain (reference or sampled styles)."""
    if style_ref and samples:
        raise click.UsageError("--style-ref and --samples are mutually exclusive")
    if not style_ref and not samples:
        samples = 1
    target = int(target_domain)
    model, _, _, _ = DRLModel.load(checkpoint)
    source = 3 - target
    pixels = _read_image(Path(image_path))
    if pixels.shape[-1] != model.config.image_size:
        raise ConfigError(f"image is {pixels.shape[-1]}px, model expects {model.config.image_size}px")
    src = ImageBatch(pixels=pixels.clamp(-1, 1), domain=source)
    out_dir = Path(output)
    written = []
    with torch.no_grad():
        if style_ref:
            ref = ImageBatch(pixels=_read_image(Path(style_ref)).clamp(-1, 1), domain=target)
            result = model.style_transfer(src, ref)
            path = out_dir / "translated_ref.png"
            _write_image(path, result.pixels)
            written.append(path)
        else:
            prior = StylePrior(model.config.style_dim, torch.Generator().manual_seed(seed))
            for i in range(samples):
                result = model.translate(src, target, prior.sample(1))
                path = out_dir / f"translated_{i:02d}.png"
                _write_image(path, result.pixels)
                written.append(path)
    for path in written:
        click.echo(str(path))


@main.command("report")
@click.argument("results_dir", type=click.Path(exists=True))
@click.option("-o", "--output", default=None, help="CSV path (default: <results>/summary.csv)")
@_fail_codes
def cmd_report(results_dir, output):
    """Aggregate metrics records from a results directory into a CSV table."""
    path = write_summary_csv(results_dir, output)
    with open(path) as f:
        lines = f.read().splitlines()
    click.echo(f"{len(lines) - 1} rows -> {path}")
    for line in lines[: min(len(lines), 12)]:
        click.echo(line)


if __name__ == "__main__":
    main()
