from pathlib import Path

import click
import numpy as np
from rich import print as rprint

from .commands import commands, quiet_option
from ..data_file import read_data
from ..em import EmConfig, em_fit, em_fit_restarts
from ..harness.spec_file import parse_fit_config, read_text
from ..metrics import adjusted_rand_index
from ..model_file import write_model
from ..simgen import CONTAMINANT, InitScheme, init_random, stream
from ..tamd import FitterConfig, fit, predict

DATA_SCHEMES = [s.value for s in InitScheme if s != InitScheme.PERTURBED_TRUTH]


@commands.command(name="fit", help="Fit a Gaussian mixture to a data CSV and write the model JSON")
@click.argument("data_file")
@click.option("n_components", "--k", "-k", type=click.IntRange(min=1), required=True, help="Number of components")
@click.option("--method", "-m", type=click.Choice(["tamd", "em"]), default="tamd")
@click.option("config_path", "--config", "-c", default=None, help="Config file with penalty.*, fitter.* and em.* keys")
@click.option("--init-scheme", type=click.Choice(DATA_SCHEMES), default=InitScheme.KMEANSPP_LIKE.value)
@click.option("--lambda-n", type=float, default=None, help="Penalty schedule value, default sqrt(log n / n)")
@click.option("--seed", "-s", type=click.IntRange(min=0), default=0)
@click.option("--out", "-o", default="output/model.json", help="Model JSON path")
@quiet_option
def cmd_fit(data_file: str, n_components: int, method: str, config_path: str, init_scheme: str, lambda_n: float,
            seed: int, out: str):
    data, labels = read_data(data_file)
    fitter, em = parse_fit_config(read_text(config_path)) if config_path else (FitterConfig(), EmConfig())
    if lambda_n is not None:
        fitter = fitter.copy(penalty=fitter.penalty.copy(lambda_n=lambda_n))

    init = init_random(data, n_components, init_scheme, stream(seed, "init"))
    if method == "tamd":
        result = fit(data, init, fitter)
    elif em.restarts > 1:
        result = em_fit_restarts(data, n_components, em, stream(seed, "restarts"), init=init)
    else:
        result = em_fit(data, init, em)

    write_model(result.params, Path(out))
    status = "[green]converged" if result.converged else "[yellow]stopped"
    rprint(f"{method}: {status}[/] after {result.iterations} iterations, "
           f"final objective [bold]{result.final_objective:.6f}[/]")
    if result.backtrack_events:
        rprint(f"  {result.backtrack_events} backtracking events")
    if result.degenerate:
        rprint(f"[yellow]  Degenerate fit: min covariance determinant {result.params.min_det:.3g}")
    if labels is not None and np.count_nonzero(labels != CONTAMINANT) >= 2:
        rprint(f"  ARI against file labels: {adjusted_rand_index(labels, predict(data, result.params)):.4f}")
    rprint(f"Created [cyan]{out}[/cyan]")
