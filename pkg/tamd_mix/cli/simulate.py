from pathlib import Path

import click
from rich import print as rprint

from .commands import commands, quiet_option
from ..data_file import write_data
from ..harness.spec_file import parse_dgp, read_text
from ..model_file import write_model
from ..simgen import DgpKind, DgpSpec, generate


@commands.command(name="simulate", help="Draw a labelled sample from a synthetic mixture and write it as CSV")
@click.option("--kind", type=click.Choice([k.value for k in DgpKind]), default=None)
@click.option("--n", "-n", type=int, default=None, help="Sample size")
@click.option("--d", "-d", type=int, default=None, help="Dimension")
@click.option("k_true", "--k", "-k", type=int, default=None, help="Number of true components")
@click.option("--delta", type=float, default=None, help="Minimum distance between true means")
@click.option("--kappa", type=float, default=None, help="Covariance condition number")
@click.option("--eps", type=float, default=None, help="Contamination fraction")
@click.option("--seed", "-s", type=click.IntRange(min=0), default=None)
@click.option("config_path", "--config", "-c", default=None, help="key = value file of data-generating settings")
@click.option("--out", "-o", default="output/data.csv", help="Data CSV path")
@click.option("--truth", default=None, help="Also write the generating mixture as model JSON")
@quiet_option
def cmd_simulate(kind, n, d, k_true, delta, kappa, eps, seed, config_path, out, truth):
    spec = parse_dgp(read_text(config_path)) if config_path else DgpSpec()
    overrides = dict(kind=kind, n=n, d=d, k_true=k_true, separation_delta=delta, condition_kappa=kappa,
                     contamination_eps=eps, seed=seed)
    spec = spec.copy(**{name: value for name, value in overrides.items() if value is not None})

    sample = generate(spec)
    write_data(Path(out), sample.data, sample.labels)
    rprint(f"{spec.kind}: n={spec.n} d={spec.d} K={spec.k_true} delta={spec.separation_delta} "
           f"(Hellinger separation {sample.hellinger_separation:.4f}), "
           f"{sample.contaminant_fraction:.1%} contaminants")
    if truth:
        write_model(sample.truth, Path(truth))
        rprint(f"Created [cyan]{truth}[/cyan]")
    rprint(f"Created [cyan]{out}[/cyan]")
