"""Aggregate metrics records into a summary CSV shaped like the result tables:
one row per (experiment, method, domain, phase, seed, fold) with mean/std Dice
and the published clinical-scale reference where one exists."""

import csv
from pathlib import Path

from ..records import read_records

COLUMNS = ["experiment", "method", "domain", "phase", "seed", "fold", "n",
           "mean_dice", "std_dice", "reference_mean", "reference_std", "reference_note"]


def collect_records(records_dir: str | Path) -> list[dict]:
    records = []
    for path in sorted(Path(records_dir).glob("*.jsonl")):
        if path.name == "timing.jsonl":
            continue
        for rec in read_records(path):
            if "dice_scores" in rec:
                records.append(rec)
    return records


def write_summary_csv(root: str | Path, out_path: str | Path | None = None) -> Path:
    root = Path(root)
    out_path = Path(out_path) if out_path else root / "summary.csv"
    records = collect_records(root / "records")
    rows = []
    for rec in records:
        ref = rec.get("clinical_reference") or {}
        rows.append({
            "experiment": rec["experiment"], "method": rec["method"],
            "domain": rec["domain"], "phase": rec["phase"],
            "seed": rec["seed"], "fold": rec["fold"], "n": rec["n"],
            "mean_dice": f"{rec['mean_dice']:.4f}", "std_dice": f"{rec['std_dice']:.4f}",
            "reference_mean": ref.get("mean", ""), "reference_std": ref.get("std", ""),
            "reference_note": ref.get("note", ""),
        })
    rows.sort(key=lambda r: (r["experiment"], r["method"], str(r["domain"]),
                             r["phase"], r["seed"], r["fold"]))
    with open(out_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return out_path
