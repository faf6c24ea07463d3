"""Built-in desk-scale experiments; `full=True` restores the published sizes."""
from dataclasses import dataclass

from ..affinity import PenaltyConfig
from ..em import EmConfig
from ..error import SpecError
from ..simgen import DgpKind, InitScheme
from ..tamd import FitterConfig
from .experiment import DgpGrid, ExperimentSpec

DISPLACED_INIT_NOISE = 4.0
OUTLIER_SCALE_BETA = 0.25


@dataclass(frozen=True)
class Preset:
    spec: ExperimentSpec
    plot_x: str
    """Cell field used as the x axis of the plot data"""


def _table1(full: bool) -> Preset:
    grid = DgpGrid(kinds=(DgpKind.WELL_SPECIFIED,), n=(1000 if full else 500,), d=(20 if full else 10,),
                   k_true=(3,), separation_delta=(1.0,))
    # initial means displaced well outside the data cloud, so some component starts with a handful of points
    spec = ExperimentSpec(name="table1", dgp=grid, replications=100 if full else 30, em=EmConfig(restarts=1),
                          init_scheme=InitScheme.PERTURBED_TRUTH, init_noise=DISPLACED_INIT_NOISE)
    return Preset(spec, "delta")


def _robustness(full: bool) -> Preset:
    grid = DgpGrid(kinds=(DgpKind.CONTAMINATED,), n=(1000 if full else 500,), d=(2,), k_true=(3,),
                   separation_delta=(2.0,), contamination_eps=(0.0, 0.05, 0.1))
    fitter = FitterConfig(penalty=PenaltyConfig(lambda_sc=1.0, beta=OUTLIER_SCALE_BETA))
    return Preset(ExperimentSpec(name="robustness", dgp=grid, replications=100 if full else 20, fitter=fitter), "eps")


def _conditioning(full: bool) -> Preset:
    grid = DgpGrid(kinds=(DgpKind.ILL_CONDITIONED,), n=(1000 if full else 500,), d=(5,), k_true=(3,),
                   separation_delta=(2.0,), condition_kappa=(5.0, 20.0, 80.0))
    return Preset(ExperimentSpec(name="conditioning", dgp=grid, replications=100 if full else 20), "kappa")


def _highdim(full: bool) -> Preset:
    grid = DgpGrid(kinds=(DgpKind.HIGH_DIM,), d=(10, 50, 200) if full else (10, 50), n_over_d=(2.0, 5.0, 10.0),
                   k_true=(3,), separation_delta=(2.0,))
    spec = ExperimentSpec(name="highdim", dgp=grid, replications=100 if full else 5, hellinger_draws=5_000)
    return Preset(spec, "d")


def _highdim_headline(full: bool) -> Preset:
    grid = DgpGrid(kinds=(DgpKind.HIGH_DIM,), n=(300,), d=(200,), k_true=(3,), separation_delta=(1.0,),
                   contamination_eps=(0.08,))
    spec = ExperimentSpec(name="highdim-headline", dgp=grid, replications=100 if full else 3, hellinger_draws=5_000)
    return Preset(spec, "d")


def _consistency(full: bool) -> Preset:
    grid = DgpGrid(kinds=(DgpKind.WELL_SPECIFIED,), n=(250, 1000, 4000, 16000) if full else (250, 1000, 4000),
                   d=(2,), k_true=(3,), separation_delta=(3.0,))
    spec = ExperimentSpec(name="consistency", dgp=grid, replications=100 if full else 20,
                          init_scheme=InitScheme.PERTURBED_TRUTH, init_noise=0.5)
    return Preset(spec, "n")


PRESETS = {
    "table1": _table1,
    "robustness": _robustness,
    "conditioning": _conditioning,
    "highdim": _highdim,
    "highdim-headline": _highdim_headline,
    "consistency": _consistency,
}


def preset(name: str, full: bool = False) -> Preset:
    if name not in PRESETS:
        raise SpecError(f"Unknown preset {name}, choose one of {', '.join(PRESETS)}")
    return PRESETS[name](full)
