"""Result bundles on disk: config echo, per-epoch CSV, summary JSON,
checkpoint. Reruns with the same config and seed are byte-identical.

The output root can be overridden with the ``VARDRO_OUTPUT_ROOT``
environment variable; relative output directories are resolved against it.
"""

from __future__ import annotations

import csv
import io
import json
import os
import statistics
from pathlib import Path

from .config import ExperimentConfig
from .data import corrupt
from .errors import OutputIoError
from .models import checkpoint_dict
from .training import MetricsRecord, TrainResult, build_datasets, evaluate, train

OUTPUT_ROOT_ENV = "VARDRO_OUTPUT_ROOT"

CSV_FIELDS = (
    "epoch",
    "split",
    "accuracy",
    "mean_loss",
    "worst_group_accuracy",
    "eps_mean",
    "eps_max",
    "upper_bound_frac",
)


def resolve_output_dir(output_dir: str) -> Path:
    path = Path(output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OutputIoError(f"failed writing {path}: {exc}") from exc


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def metrics_csv_text(records: list[MetricsRecord]) -> str:
    group_cols = sorted({tag for r in records for tag in r.group_accuracies})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(CSV_FIELDS) + [f"acc[{g}]" for g in group_cols])
    for r in records:
        row = [
            r.epoch,
            r.split,
            r.accuracy,
            r.mean_loss,
            "" if r.worst_group_accuracy is None else r.worst_group_accuracy,
            r.eps_mean,
            r.eps_max,
            r.upper_bound_frac,
        ]
        row += [r.group_accuracies.get(g, "") for g in group_cols]
        writer.writerow(row)
    return buf.getvalue()


def run_experiment(config: ExperimentConfig) -> dict:
    """Train one config and write the bundle; returns the summary with paths."""
    out_dir = resolve_output_dir(config.output_dir)
    train_ds, test_ds = build_datasets(config)
    result: TrainResult = train(config, train_ds=train_ds, test_ds=test_ds)

    summary: dict = {
        "method": config.method,
        "seed": config.seed,
        "final": {
            "train": evaluate(result.params, result.arch, train_ds, "train", config.epochs).to_json(),
            "test": evaluate(result.params, result.arch, test_ds, "test", config.epochs).to_json(),
        },
    }
    epoch_evals = {
        str(r.epoch): r.to_json()
        for r in result.records
        if r.split == "test" and r.epoch in config.eval_at_epochs
    }
    if epoch_evals:
        summary["epoch_evals"] = epoch_evals
    if config.corruptions is not None:
        summary["corruptions"] = _corruption_table(config, result, test_ds)

    paths = {
        "config": out_dir / "config.json",
        "metrics": out_dir / "metrics.csv",
        "summary": out_dir / "summary.json",
        "checkpoint": out_dir / "checkpoint.json",
    }
    _write_text(paths["config"], _dump_json(config.model_dump(mode="json")))
    _write_text(paths["metrics"], metrics_csv_text(result.records))
    _write_text(paths["checkpoint"], _dump_json(checkpoint_dict(result.arch, result.params)))
    if result.store is not None:
        paths["sample_stats"] = out_dir / "sample_stats.json"
        _write_text(paths["sample_stats"], _dump_json(result.store.to_json()))
    summary["paths"] = {k: str(v) for k, v in paths.items()}
    summary["output_dir"] = str(out_dir)
    _write_text(paths["summary"], _dump_json(summary))
    return summary


def _corruption_table(config: ExperimentConfig, result: TrainResult, test_ds) -> dict:
    """Per-kind accuracy at each severity, plus per-kind means and the
    grand mean over kinds."""
    table: dict = {}
    kind_means = []
    for kind in config.corruptions.kinds:
        per_sev = {}
        for sev in config.corruptions.severities:
            shifted = corrupt(test_ds, kind, sev, seed=config.seed)
            rec = evaluate(result.params, result.arch, shifted, f"{kind}@{sev}", config.epochs)
            per_sev[str(sev)] = rec.accuracy
        mean = sum(per_sev.values()) / len(per_sev)
        per_sev["mean"] = mean
        kind_means.append(mean)
        table[kind] = per_sev
    table["grand_mean"] = sum(kind_means) / len(kind_means)
    return table


def run_sweep(
    base: ExperimentConfig,
    methods: list[str],
    seeds: list[int],
    output_dir: str | None = None,
) -> dict:
    """Cross product of methods and seeds; one run directory per cell plus
    an aggregate summary with per-method medians over seeds."""
    if not methods or not seeds:
        raise ValueError("sweep needs at least one method and one seed")
    sweep_root = resolve_output_dir(output_dir or base.output_dir)
    rows = []
    for method in methods:
        for seed in seeds:
            cfg = base.model_copy(
                update={
                    "method": method,
                    "seed": seed,
                    "output_dir": str(Path(output_dir or base.output_dir) / f"{method}_seed{seed}"),
                }
            )
            rows.append(run_experiment(cfg))

    aggregate: dict = {
        "methods": list(methods),
        "seeds": list(seeds),
        "rows": rows,
        "median_test_accuracy": {
            m: statistics.median(
                r["final"]["test"]["accuracy"] for r in rows if r["method"] == m
            )
            for m in methods
        },
    }
    group_tags = sorted(
        {g for r in rows for g in r["final"]["test"]["group_accuracies"]}
    )
    if group_tags:
        aggregate["median_group_accuracy"] = {
            m: {
                g: statistics.median(
                    r["final"]["test"]["group_accuracies"][g]
                    for r in rows
                    if r["method"] == m
                )
                for g in group_tags
            }
            for m in methods
        }
    if base.corruptions is not None:
        kinds = list(base.corruptions.kinds)
        table = {
            kind: {
                m: statistics.median(
                    r["corruptions"][kind]["mean"] for r in rows if r["method"] == m
                )
                for m in methods
            }
            for kind in kinds
        }
        table["grand_mean"] = {
            m: statistics.median(
                r["corruptions"]["grand_mean"] for r in rows if r["method"] == m
            )
            for m in methods
        }
        aggregate["corruption_table"] = table

    _write_text(sweep_root / "sweep_summary.json", _dump_json(aggregate))
    aggregate["output_dir"] = str(sweep_root)
    return aggregate
