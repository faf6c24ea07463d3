"""Seeded replication sweeps over a grid of data-generating processes."""
import dataclasses
import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from ..em import EmConfig, em_fit, em_fit_restarts
from ..error import ContractViolation, SpecError, TamdError, require
from ..metrics import score_fit
from ..simgen import DgpKind, DgpSpec, InitScheme, LabeledSample, generate, init_random, sample_mixture, stream
from ..tamd import FitResult, FitterConfig, fit
from .results import CELL_FIELDS, write_run_outputs

log = logging.getLogger(__name__)

METHODS = ("tamd", "em")
SUMMARY_METRICS = ("success", "mean_mse", "cov_frobenius_error", "hellinger_to_truth", "ari", "accuracy",
                   "heldout_loglik", "final_objective", "iterations", "backtracks", "gradient_evals", "wall_time_s")


def _tuple(values) -> tuple:
    if isinstance(values, (list, tuple)):
        return tuple(values)
    return (values,)


@dataclass(frozen=True)
class DgpGrid:
    """Lists of values per DgpSpec field; cells are their Cartesian product."""
    kinds: tuple[DgpKind, ...] = (DgpKind.WELL_SPECIFIED,)
    n: tuple[int, ...] = (500,)
    n_over_d: tuple[float, ...] = ()
    """When given, n follows d as round(ratio·d) and the n list is ignored"""
    d: tuple[int, ...] = (2,)
    k_true: tuple[int, ...] = (3,)
    separation_delta: tuple[float, ...] = (2.0,)
    condition_kappa: tuple[float, ...] = (1.0,)
    contamination_eps: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        for f in dataclasses.fields(self):
            object.__setattr__(self, f.name, _tuple(getattr(self, f.name)))
        try:
            object.__setattr__(self, "kinds", tuple(DgpKind(k) for k in self.kinds))
        except ValueError as e:
            raise SpecError(str(e)) from None
        for f in dataclasses.fields(self):
            if f.name != "n_over_d" and not getattr(self, f.name):
                raise SpecError(f"Grid field {f.name} is empty")
        if any(ratio <= 0 for ratio in self.n_over_d):
            raise SpecError("n_over_d ratios must be positive")

    def copy(self, /, **changes) -> "DgpGrid":
        return dataclasses.replace(self, **changes)

    def cells(self) -> list[DgpSpec]:
        sizes = [("ratio", r) for r in self.n_over_d] if self.n_over_d else [("n", n) for n in self.n]
        cells = []
        for kind, d, (size_kind, size), k, delta, kappa, eps in product(
                self.kinds, self.d, sizes, self.k_true, self.separation_delta, self.condition_kappa,
                self.contamination_eps):
            n = max(1, round(size * d)) if size_kind == "ratio" else size
            cells.append(DgpSpec(kind, int(n), int(d), int(k), float(delta), float(kappa), float(eps)))
        return cells


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "experiment"
    dgp: DgpGrid = field(default_factory=DgpGrid)
    methods: tuple[str, ...] = METHODS
    replications: int = 1
    base_seed: int = 0
    fitter: FitterConfig = field(default_factory=FitterConfig)
    em: EmConfig = field(default_factory=EmConfig)
    heldout_n: int = 1000
    output_dir: str = "output"
    init_scheme: InitScheme = InitScheme.KMEANSPP_LIKE
    init_noise: float = 0.5
    """Mean noise scale for perturbed_truth initializations"""
    hellinger_draws: int = 10_000
    record_timing: bool = False
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", _tuple(self.methods))
        try:
            object.__setattr__(self, "init_scheme", InitScheme(self.init_scheme))
        except ValueError as e:
            raise SpecError(str(e)) from None
        checks = [
            (bool(self.methods), "methods must not be empty"),
            (all(m in METHODS for m in self.methods), f"methods must be drawn from {', '.join(METHODS)}"),
            (len(set(self.methods)) == len(self.methods), "methods must not repeat"),
            (self.replications >= 1, "replications must be positive"),
            (0 <= self.base_seed < 2 ** 64, "base_seed must be a 64-bit unsigned integer"),
            (self.heldout_n >= 1, "heldout_n must be positive"),
            (self.init_noise >= 0, "init_noise must be nonnegative"),
            (self.hellinger_draws >= 2, "hellinger_draws must be at least 2"),
            (self.threads >= 1, "threads must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise SpecError(message)

    def copy(self, /, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RunRecord:
    kind: str
    n: int
    d: int
    k: int
    delta: float
    kappa: float
    eps: float
    method: str
    replication: int
    seed: int
    success: Optional[bool] = None
    mean_mse: float = math.nan
    cov_frobenius_error: float = math.nan
    hellinger_to_truth: float = math.nan
    hellinger_se: float = math.nan
    ari: float = math.nan
    accuracy: float = math.nan
    heldout_loglik: float = math.nan
    final_objective: float = math.nan
    iterations: Optional[int] = None
    backtracks: Optional[int] = None
    gradient_evals: Optional[int] = None
    converged: Optional[bool] = None
    degenerate: Optional[bool] = None
    wall_time_s: float = math.nan
    matching: str = ""
    truth_separation: float = math.nan
    error: str = ""

    @property
    def cell(self) -> tuple:
        return tuple(getattr(self, name) for name in CELL_FIELDS)

    def value(self, metric: str) -> float:
        value = getattr(self, metric)
        return math.nan if value is None else float(value)


def cell_coordinates(cell: DgpSpec) -> tuple:
    return (str(cell.kind), cell.n, cell.d, cell.k_true, cell.separation_delta, cell.condition_kappa,
            cell.contamination_eps)


def replication_seed(base_seed: int, cell: DgpSpec, replication: int) -> int:
    """64-bit seed derived from the base seed and the cell coordinates, never from execution order."""
    key = "|".join(str(v) for v in cell_coordinates(cell)) + f"|{replication}"
    digest = int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")
    low, high = np.random.SeedSequence([base_seed, digest]).generate_state(2, np.uint32)
    return int(low) | (int(high) << 32)


def _fit_method(spec: ExperimentSpec, method: str, sample: LabeledSample, init, seed: int) -> FitResult:
    if method == "tamd":
        return fit(sample.data, init, spec.fitter)
    if spec.em.restarts == 1:
        return em_fit(sample.data, init, spec.em)
    return em_fit_restarts(sample.data, sample.truth.n_components, spec.em, stream(seed, "restarts"), init=init)


def run_replication(spec: ExperimentSpec, cell: DgpSpec, replication: int) -> list[RunRecord]:
    """One record per method; both methods see the same data, held-out set and initialization."""
    seed = replication_seed(spec.base_seed, cell, replication)
    base = dict(zip(CELL_FIELDS, cell_coordinates(cell)), replication=replication, seed=seed)
    try:
        sample = generate(cell.copy(seed=seed))
        heldout, _ = sample_mixture(sample.truth, spec.heldout_n, stream(seed, "heldout"))
        init = init_random(sample.data, cell.k_true, spec.init_scheme, stream(seed, "init"),
                           truth=sample.truth, noise_scale=spec.init_noise)
    except TamdError as e:
        log.warning("Replication %d of %s could not start: %s", replication, base, e)
        return [RunRecord(**base, method=method, error=f"{type(e).__name__}: {e}") for method in spec.methods]

    records = []
    for method in spec.methods:
        try:
            result = _fit_method(spec, method, sample, init, seed)
            report = score_fit(result, sample, heldout, stream(seed, "hellinger", method), spec.hellinger_draws)
        except (TamdError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            log.warning("%s failed on replication %d of %s: %s", method, replication, base, e)
            records.append(RunRecord(**base, method=method, error=f"{type(e).__name__}: {e}"))
            continue
        records.append(RunRecord(
            **base,
            method=method,
            success=report.success,
            mean_mse=report.mean_mse,
            cov_frobenius_error=report.cov_frobenius_error,
            hellinger_to_truth=report.hellinger_to_truth,
            hellinger_se=report.hellinger_se,
            ari=report.ari,
            accuracy=report.accuracy,
            heldout_loglik=report.heldout_loglik,
            final_objective=result.final_objective,
            iterations=result.iterations,
            backtracks=result.backtrack_events,
            gradient_evals=result.gradient_evals,
            converged=result.converged,
            degenerate=result.degenerate,
            wall_time_s=result.wall_time,
            matching=report.as_row()["matching"],
            truth_separation=sample.hellinger_separation,
        ))
    return records


def run_experiment(spec: ExperimentSpec, *, write: bool = True) -> list[RunRecord]:
    """Every cell × replication × method, merged in coordinate order whatever the pool width."""
    cells = spec.dgp.cells()
    tasks = [(cell, replication) for cell in cells for replication in range(spec.replications)]
    log.info("Running %s: %d cells, %d replications, methods %s", spec.name, len(cells), spec.replications,
             ", ".join(spec.methods))
    started = time.perf_counter()
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            chunks = list(pool.map(lambda task: run_replication(spec, *task), tasks))
    else:
        chunks = [run_replication(spec, *task) for task in tasks]
    records = [record for chunk in chunks for record in chunk]
    log.info("Finished %d runs in %.1fs", len(records), time.perf_counter() - started)
    if write:
        write_run_outputs(spec, records)
    return records


@dataclass(frozen=True)
class SummaryRow:
    cell: tuple
    method: str
    replications: int
    errors: int
    stats: dict[str, tuple[float, float]]
    """metric -> (mean, standard error); NaN standard error with fewer than two values"""


def _mean_and_se(values: list[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, math.nan
    return mean, float(np.std(values, ddof=1)) / math.sqrt(len(values))


def summarize(records: list[RunRecord], metrics: tuple[str, ...] = SUMMARY_METRICS) -> list[SummaryRow]:
    """Mean and standard error of each metric per (cell, method), in first-seen order."""
    if not records:
        raise ContractViolation("Nothing to summarize")
    groups: dict[tuple, list[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.cell, record.method), []).append(record)
    rows = []
    for (cell, method), group in groups.items():
        healthy = [r for r in group if not r.error]
        stats = {}
        for metric in metrics:
            values = [r.value(metric) for r in healthy]
            stats[metric] = _mean_and_se([v for v in values if not math.isnan(v)])
        rows.append(SummaryRow(cell, method, len(group), len(group) - len(healthy), stats))
    return rows


def find_row(rows: list[SummaryRow], method: str, **coordinates) -> SummaryRow:
    """The unique summary row for method whose cell matches the given coordinates."""
    require(all(name in CELL_FIELDS for name in coordinates), f"Unknown cell fields {sorted(coordinates)}")
    matches = [row for row in rows if row.method == method and
               all(row.cell[CELL_FIELDS.index(name)] == value for name, value in coordinates.items())]
    require(len(matches) == 1, f"{len(matches)} summary rows match {method} {coordinates}")
    return matches[0]
