import click
from rich import print as rprint

from .commands import commands, is_quiet, quiet_option
from ..barrier_grad import fd_check, random_penalty, random_theta
from ..error import ExitCode, fail
from ..simgen import stream

DIMENSIONS = (1, 2, 3, 5)
COMPONENT_COUNTS = (2, 3, 4)


@commands.command(name="gradcheck", help="Check the barrier gradients against central finite differences")
@click.option("--seed", "-s", type=click.IntRange(min=0), default=0)
@click.option("--configs", "-n", type=click.IntRange(min=1), default=100, help="Number of random configurations")
@click.option("--step", type=click.FloatRange(min=0, max=1e-3, min_open=True), default=1e-5)
@click.option("--tolerance", "-t", type=float, default=1e-5, help="Largest accepted relative error")
@quiet_option
def cmd_gradcheck(seed: int, configs: int, step: float, tolerance: float):
    passed_count, failed_count, worst = 0, 0, 0.0
    for index in range(configs):
        rng = stream(seed, "gradcheck", index)
        dim = int(rng.choice(DIMENSIONS))
        n_components = int(rng.choice(COMPONENT_COUNTS))
        theta = random_theta(rng, dim, n_components)
        error = fd_check(theta, random_penalty(rng), step)
        worst = max(worst, error)
        ok = error < tolerance
        passed_count += ok
        failed_count += not ok
        if not is_quiet() or not ok:
            result = "[green]pass" if ok else "[red]FAIL"
            rprint(f"[yellow]Configuration {index + 1}[/] d={dim} K={n_components}: "
                   f"relative error {error:.3e} {result}")

    rprint(f"Max relative error: [bold]{worst:.3e}[/]")
    if failed_count:
        fail(f"FAIL: {failed_count}/{configs} configurations above {tolerance:g}", ExitCode.NUMERICAL)
    rprint(f"[green]PASS: all {passed_count} configurations below {tolerance:g}")
