import math
from pathlib import Path
from typing import Optional

import click
from rich import print as rprint
from rich.table import Table

from .commands import commands, quiet_option
from ..harness.experiment import ExperimentSpec, SummaryRow, run_experiment, summarize
from ..harness.results import CELL_FIELDS, write_summary_csv
from ..harness.spec_file import load_experiment

TABLE_METRICS = ("success", "mean_mse", "cov_frobenius_error", "hellinger_to_truth", "ari", "heldout_loglik")


def _cell_text(value, se: Optional[float] = None) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "-"
        text = f"{value:.4g}"
        return text if se is None or math.isnan(se) else f"{text} ({se:.2g})"
    return str(value)


def print_summary(rows: list[SummaryRow], title: str):
    table = Table(title=title)
    varying = [i for i, name in enumerate(CELL_FIELDS) if len({row.cell[i] for row in rows}) > 1]
    for i in varying:
        table.add_column(CELL_FIELDS[i], style="cyan")
    table.add_column("method", style="bold")
    for metric in TABLE_METRICS:
        table.add_column(metric, justify="right")
    for row in rows:
        method = row.method if not row.errors else f"{row.method} [red]({row.errors} errors)"
        stats = [_cell_text(*row.stats[metric]) for metric in TABLE_METRICS]
        table.add_row(*[_cell_text(row.cell[i]) for i in varying], method, *stats)
    rprint(table)


def apply_overrides(spec: ExperimentSpec, out: Optional[str], threads: Optional[int],
                    seed: Optional[int]) -> ExperimentSpec:
    changes = dict(output_dir=out, threads=threads, base_seed=seed)
    return spec.copy(**{name: value for name, value in changes.items() if value is not None})


def run_and_report(spec: ExperimentSpec) -> list[SummaryRow]:
    records = run_experiment(spec)
    rows = summarize(records)
    out = Path(spec.output_dir)
    write_summary_csv(rows, out / "summary.csv", spec.record_timing)
    print_summary(rows, spec.name)
    failed = sum(1 for r in records if r.error)
    if failed:
        rprint(f"[yellow]{failed}/{len(records)} runs failed, see the error column")
    rprint(f"Created [cyan]{out / 'results.csv'}[/cyan], [cyan]{out / 'summary.csv'}[/cyan]")
    return rows


@commands.command(name="benchmark", help="Run the experiment described by a spec file")
@click.argument("spec_file")
@click.option("--out", "-o", default=None, help="Output directory, overrides output_dir")
@click.option("--threads", "-j", type=click.IntRange(min=1), default=None, help="Work pool width")
@click.option("--seed", "-s", type=click.IntRange(min=0), default=None, help="Overrides base_seed")
@quiet_option
def cmd_benchmark(spec_file: str, out: str, threads: int, seed: int):
    spec = apply_overrides(load_experiment(spec_file), out, threads, seed)
    run_and_report(spec)
