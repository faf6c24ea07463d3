from pathlib import Path

import click
from rich import print as rprint

from .benchmark import apply_overrides, run_and_report
from .commands import commands, quiet_option
from ..harness.presets import PRESETS, preset
from ..harness.results import write_plot_data


@commands.command(name="reproduce", help="Run a built-in experiment at desk scale")
@click.argument("name", type=click.Choice(list(PRESETS)))
@click.option("--full", is_flag=True, default=False, help="Use the published sample sizes and replication counts")
@click.option("--out", "-o", default=None, help="Output directory, default output/<name>")
@click.option("--threads", "-j", type=click.IntRange(min=1), default=None, help="Work pool width")
@click.option("--seed", "-s", type=click.IntRange(min=0), default=None, help="Base seed")
@quiet_option
def cmd_reproduce(name: str, full: bool, out: str, threads: int, seed: int):
    chosen = preset(name, full)
    spec = apply_overrides(chosen.spec, out or str(Path("output") / name), threads, seed)
    rows = run_and_report(spec)
    plot_path = Path(spec.output_dir) / "plot_data.csv"
    write_plot_data(rows, chosen.plot_x, plot_path)
    rprint(f"Created [cyan]{plot_path}[/cyan]")
