"""Writing an EvaluationReport to a run directory."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .crossval import EvaluationReport


def _num(x):
    return "" if x is None else repr(float(x))


def report_json(report: EvaluationReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_report(report: EvaluationReport, run_dir) -> dict:
    """Write report.json, metrics.csv, predictions.csv and attention.csv.

    Output depends only on the report contents, so identical runs give
    identical bytes. Missing correlations are written as empty cells.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: run_dir / name for name in
             ("report.json", "metrics.csv", "predictions.csv", "attention.csv")}
    paths["report.json"].write_text(report_json(report), encoding="utf-8")
    seed = report.config.get("seed")

    with open(paths["metrics.csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "imputation", "fold", "n_test", "mse", "r", "gamma", "seed"])
        for f in report.folds:
            w.writerow([f.model, f.imputation, f.fold, f.n_test, _num(f.mse), _num(f.r), _num(f.gamma), seed])

    with open(paths["predictions.csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "dyad_id", "imputation", "fold", "pred", "obs", "seed"])
        for model, dyad_id, j, f, p, o in report.predictions:
            w.writerow([model, dyad_id, j, f, _num(p), _num(o), seed])

    with open(paths["attention.csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "dyad_id", "imputation", "position", "alpha", "seed"])
        for model, dyad_id, j, pos, a in report.attention:
            w.writerow([model, dyad_id, j, pos, _num(a), seed])
    return paths
