"""Result persistence: per-run CSV and JSON, the run manifest, the summary table and plot data."""
import csv
import dataclasses
import json
import math
import os
from importlib import metadata
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from ..error import ContractViolation

if TYPE_CHECKING:
    from .experiment import ExperimentSpec, RunRecord, SummaryRow

CELL_FIELDS = ("kind", "n", "d", "k", "delta", "kappa", "eps")
RESULT_COLUMNS = CELL_FIELDS + ("method", "replication", "seed", "success", "mean_mse", "cov_frobenius_error",
                                "hellinger_to_truth", "ari", "heldout_loglik", "final_objective", "iterations",
                                "backtracks", "wall_time_s", "error")
PACKAGE = "tamd-mix"


def software_version() -> str:
    try:
        return metadata.version(PACKAGE)
    except metadata.PackageNotFoundError:
        return "unknown"


def format_value(value) -> str:
    """Deterministic text for one cell: shortest round-trip floats, lowercase booleans, empty for missing."""
    if value is None:
        return ""
    if type(value) is bool:
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _open_for_writing(path: Path):
    os.makedirs(path.parent, exist_ok=True)
    return open(path, "w", newline="")


def write_results_csv(records: Iterable["RunRecord"], path: Path, record_timing: bool = False):
    with _open_for_writing(path) as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for record in records:
            row = []
            for column in RESULT_COLUMNS:
                value = getattr(record, column)
                if column == "wall_time_s" and not record_timing:
                    value = None
                row.append(format_value(value))
            writer.writerow(row)


def write_results_json(records: Iterable["RunRecord"], path: Path):
    rows = [{k: _json_value(v) for k, v in dataclasses.asdict(r).items()} for r in records]
    with _open_for_writing(path) as file:
        json.dump(rows, file, indent=2)
        file.write("\n")


def write_manifest(spec: "ExperimentSpec", path: Path, cells: list[dict]):
    manifest = {
        "software": PACKAGE,
        "version": software_version(),
        "spec": dataclasses.asdict(spec),
        "cells": cells,
    }
    with _open_for_writing(path) as file:
        json.dump(manifest, file, indent=2, default=str)
        file.write("\n")


def _cell_manifest(records: Iterable["RunRecord"]) -> list[dict]:
    """Mean-distance δ next to the Hellinger separation of the generating truth, once per cell."""
    cells = {}
    for record in records:
        if record.cell not in cells and not math.isnan(record.truth_separation):
            cells[record.cell] = dict(zip(CELL_FIELDS, record.cell), truth_separation=record.truth_separation)
    return list(cells.values())


def summary_columns(metrics: Iterable[str]) -> list[str]:
    columns = list(CELL_FIELDS) + ["method", "replications", "errors"]
    for metric in metrics:
        columns += [f"{metric}_mean", f"{metric}_se"]
    return columns


def write_summary_csv(rows: list["SummaryRow"], path: Path, record_timing: bool = False):
    metrics = [m for m in rows[0].stats if record_timing or m != "wall_time_s"] if rows else []
    with _open_for_writing(path) as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(summary_columns(metrics))
        for row in rows:
            values = [format_value(v) for v in row.cell] + [row.method, str(row.replications), str(row.errors)]
            for metric in metrics:
                mean, se = row.stats[metric]
                values += [format_value(mean), format_value(se)]
            writer.writerow(values)


def write_plot_data(rows: list["SummaryRow"], x_field: str, path: Path):
    """Long-format series: one line per (method, x, metric) with mean and standard error."""
    if x_field not in CELL_FIELDS:
        raise ContractViolation(f"Plot x field must be one of {', '.join(CELL_FIELDS)}")
    index = CELL_FIELDS.index(x_field)
    with _open_for_writing(path) as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["method", x_field, "metric", "mean", "se"])
        for row in sorted(rows, key=lambda r: (r.method, r.cell[index])):
            for metric, (mean, se) in row.stats.items():
                writer.writerow([row.method, format_value(row.cell[index]), metric, format_value(mean),
                                 format_value(se)])


def write_run_outputs(spec: "ExperimentSpec", records: list["RunRecord"]):
    out = Path(spec.output_dir)
    write_results_csv(records, out / "results.csv", spec.record_timing)
    write_results_json(records, out / "results.json")
    write_manifest(spec, out / "manifest.json", _cell_manifest(records))
