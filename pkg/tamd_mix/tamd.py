"""Barrier-penalized E/M fitter for Gaussian mixtures.

Each iteration runs an E-step, the closed-form penalized weight maximizer, one gradient-corrected
mean/covariance step per component, and a backtracking guard that only accepts objective ascent.
"""
import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .affinity import (MixtureParams, PenaltyConfig, barrier_gap, log_affinity, objective, separation,
                       weighted_log_densities)
from .barrier_grad import grad_barrier
from .error import BarrierDomain, DegenerateCovariance, InvalidInit, require
from .gaussmath import GaussianComponent, cholesky, log_density, log_sum_exp

log = logging.getLogger(__name__)

EMPTY_MASS = 1e-10
DEGENERACY_DET_THRESHOLD = 1e-6


@dataclass(frozen=True, eq=False)
class Responsibilities:
    matrix: np.ndarray
    column_mass: np.ndarray
    uniform_rows: int = 0


@dataclass(frozen=True)
class FitterConfig:
    max_iters: int = 500
    convergence_tol: float = 1e-8
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    backtrack_factor: float = 0.5
    backtrack_max_steps: int = 30
    monotonicity_tol: float = 1e-10

    def __post_init__(self):
        require(self.max_iters >= 1, "max_iters must be positive")
        require(self.convergence_tol > 0, "convergence_tol must be positive")
        require(0 < self.backtrack_factor < 1, "backtrack_factor must lie in (0, 1)")
        require(self.backtrack_max_steps >= 1, "backtrack_max_steps must be positive")
        require(self.monotonicity_tol >= 0, "monotonicity_tol must be nonnegative")

    def copy(self, /, **changes) -> "FitterConfig":
        return dataclasses.replace(self, **changes)

    def resolved(self, n: int) -> "FitterConfig":
        if self.penalty.lambda_n is not None:
            return self
        return self.copy(penalty=self.penalty.copy(lambda_n=default_lambda(n)))


@dataclass(frozen=True, eq=False)
class FitResult:
    params: MixtureParams
    objective_trace: tuple[float, ...]
    iterations: int
    converged: bool
    degenerate: bool
    wall_time: float
    backtrack_events: int = 0
    gradient_evals: int = 0
    frozen_events: int = 0
    uniform_rows: int = 0
    method: str = "tamd"

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1]


def default_lambda(n: int) -> float:
    """λ_n = √(log n / n)."""
    require(n >= 2, "default_lambda needs n >= 2")
    return math.sqrt(math.log(n) / n)


def e_step(data: np.ndarray, theta: MixtureParams) -> Responsibilities:
    table = weighted_log_densities(data, theta)
    normalizer = log_sum_exp(np.sort(table, axis=1), axis=1)
    lost = ~np.isfinite(normalizer)
    matrix = np.exp(table - normalizer[:, None])
    uniform_rows = int(np.count_nonzero(lost))
    if uniform_rows:
        log.warning("%d points have no finite mixture density, assigning them uniformly", uniform_rows)
        matrix[lost] = 1.0 / theta.n_components
    matrix /= matrix.sum(axis=1, keepdims=True)
    return Responsibilities(matrix, matrix.sum(axis=0), uniform_rows)


def predict(data: np.ndarray, theta: MixtureParams) -> np.ndarray:
    """MAP component label of every row."""
    return np.argmax(weighted_log_densities(data, theta), axis=1)


def weight_step(resp: Responsibilities, cfg: FitterConfig) -> np.ndarray:
    """Exact maximizer of Σ_k (N_k/n + λ_n·λ_wt)·log π_k over the simplex."""
    require(cfg.penalty.lambda_n is not None, "weight_step needs a resolved lambda_n")
    n, n_components = resp.matrix.shape
    floor = cfg.penalty.lambda_n * cfg.penalty.lambda_wt
    return (resp.column_mass / n + floor) / (1.0 + n_components * floor)


def weighted_statistics(data: np.ndarray, resp: Responsibilities, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Responsibility-weighted mean x̄_k and scatter S_k."""
    weights = resp.matrix[:, k]
    mass = resp.column_mass[k]
    mean = weights @ data / mass
    centred = data - mean
    scatter = (centred * weights[:, None]).T @ centred / mass
    return mean, (scatter + scatter.T) / 2.0


def component_surrogate(data: np.ndarray, resp: Responsibilities, theta: MixtureParams, k: int,
                        candidate: GaussianComponent, cfg: PenaltyConfig) -> float:
    """Q_k(η): weighted log-likelihood of component k minus its share of λ_n·R_T."""
    n = data.shape[0]
    fit_term = float(resp.matrix[:, k] @ log_density(data, candidate)) / n
    try:
        barrier = math.fsum(-math.log(barrier_gap(log_affinity(candidate, other)))
                            for j, other in enumerate(theta.components) if j != k)
    except BarrierDomain:
        return -math.inf
    scale = cfg.alpha * float(candidate.mean @ candidate.mean) + cfg.beta * candidate.covariance.frobenius_norm ** 2
    return fit_term - cfg.lambda_n * (barrier + cfg.lambda_sc * scale)


def component_step(data: np.ndarray, resp: Responsibilities, theta: MixtureParams, k: int,
                   cfg: FitterConfig) -> GaussianComponent:
    penalty_cfg = cfg.penalty
    require(penalty_cfg.lambda_n is not None, "component_step needs a resolved lambda_n")
    old = theta.components[k]
    if resp.column_mass[k] <= EMPTY_MASS:
        log.warning("Component %d has no responsibility mass, keeping it unchanged", k)
        return old
    mean, scatter = weighted_statistics(data, resp, k)
    if penalty_cfg.lambda_n == 0:
        return GaussianComponent.from_dense(mean, scatter, penalty_cfg.jitter)

    gradient = grad_barrier(theta, k, penalty_cfg)
    sigma = old.covariance.dense
    mean = mean - penalty_cfg.lambda_n * (sigma @ gradient.wrt_mean)
    if penalty_cfg.lambda_wt > 0 and resp.column_mass[k] <= theta.dim:
        # a scatter from at most d points of mass is singular, only the mean follows the data
        log.debug("Component %d holds %.3g points of mass, keeping its covariance", k, resp.column_mass[k])
        return old.copy(mean=mean)
    correction = penalty_cfg.lambda_n * (sigma @ gradient.wrt_cov @ sigma)
    candidates = [scatter - correction, scatter + correction] if np.any(correction) else [scatter]

    best, best_score = None, -math.inf
    for dense in candidates:
        try:
            candidate = GaussianComponent.from_dense(mean, dense, penalty_cfg.jitter)
        except DegenerateCovariance:
            continue
        score = component_surrogate(data, resp, theta, k, candidate, penalty_cfg)
        if best is None or score > best_score:
            best, best_score = candidate, score
    if best is None:
        raise DegenerateCovariance(f"Component {k} covariance update is not positive definite", candidates[0])
    return best


def _safe_objective(data: np.ndarray, theta: MixtureParams, cfg: PenaltyConfig) -> float:
    try:
        value = objective(data, theta, cfg)
    except (BarrierDomain, DegenerateCovariance):
        return -math.inf
    return value if math.isfinite(value) else -math.inf


def _interpolate(old: MixtureParams, proposal: MixtureParams, alpha: float) -> MixtureParams:
    """Proposal weights with η moved a fraction alpha from old toward proposal."""
    if alpha == 0:
        return MixtureParams(proposal.weights, old.components)
    components = tuple(
        GaussianComponent((1 - alpha) * a.mean + alpha * b.mean,
                          cholesky((1 - alpha) * a.covariance.dense + alpha * b.covariance.dense))
        for a, b in zip(old.components, proposal.components)
    )
    return MixtureParams(proposal.weights, components)


def _separated(theta: MixtureParams) -> bool:
    return separation(theta) > 0


def _ascend(data: np.ndarray, theta: MixtureParams, proposal: MixtureParams, current: float,
            cfg: FitterConfig) -> tuple[Optional[MixtureParams], float, bool]:
    """Proposal, or the largest backtracked step toward it, that ascends and keeps Δ(θ) > 0."""
    floor = current - cfg.monotonicity_tol
    value = _safe_objective(data, proposal, cfg.penalty)
    if value >= floor and _separated(proposal):
        return proposal, value, False
    if value >= floor:
        log.debug("Proposal has coincident components, backtracking")
    alphas = [cfg.backtrack_factor ** s for s in range(1, cfg.backtrack_max_steps + 1)] + [0.0]
    for alpha in alphas:
        try:
            candidate = _interpolate(theta, proposal, alpha)
        except DegenerateCovariance:
            continue
        value = _safe_objective(data, candidate, cfg.penalty)
        if value >= floor and _separated(candidate):
            log.debug("Accepted backtracked step alpha=%g", alpha)
            return candidate, value, True
    return None, current, True


def fit(data: np.ndarray, init: MixtureParams, cfg: FitterConfig = FitterConfig()) -> FitResult:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    require(data.shape[1] == init.dim, f"Data has {data.shape[1]} columns, init has dimension {init.dim}")
    cfg = cfg.resolved(data.shape[0])
    if not _separated(init):
        raise InvalidInit("Initial components must be positively separated")
    if not np.all(init.weights > 0):
        raise InvalidInit("Initial weights must be strictly positive")

    started = time.perf_counter()
    theta = init
    current = _safe_objective(data, theta, cfg.penalty)
    if not math.isfinite(current):
        raise InvalidInit("Objective is not finite at the initial parameters")
    trace = [current]
    converged = degenerate = False
    backtrack_events = gradient_evals = frozen_events = uniform_rows = 0
    log.debug("Fitting n=%d d=%d K=%d lambda_n=%g", data.shape[0], init.dim, init.n_components,
              cfg.penalty.lambda_n)

    for iteration in range(cfg.max_iters):
        resp = e_step(data, theta)
        uniform_rows += resp.uniform_rows
        weights = weight_step(resp, cfg)
        if not np.all(weights > 0):
            log.warning("A component lost all weight at iteration %d", iteration)
            degenerate = True
            break
        components = []
        try:
            for k in range(theta.n_components):
                if resp.column_mass[k] <= EMPTY_MASS:
                    frozen_events += 1
                elif cfg.penalty.lambda_n > 0:
                    gradient_evals += 1
                components.append(component_step(data, resp, theta, k, cfg))
        except DegenerateCovariance as e:
            log.warning("Covariance collapsed at iteration %d: %s", iteration, e)
            degenerate = True
            break
        proposal = MixtureParams(weights, tuple(components))

        accepted, value, backtracked = _ascend(data, theta, proposal, current, cfg)
        if accepted is None:
            log.warning("Backtracking found no ascent at iteration %d, stopping", iteration)
            break
        require(_separated(accepted), f"Accepted iterate {iteration + 1} lost separation")
        backtrack_events += int(backtracked)
        previous, theta, current = current, accepted, value
        trace.append(current)
        log.debug("Iteration %d objective %.12g", iteration + 1, current)
        if abs(current - previous) <= cfg.convergence_tol * max(1.0, abs(previous)):
            converged = True
            break

    degenerate = degenerate or theta.min_det <= DEGENERACY_DET_THRESHOLD
    return FitResult(
        params=theta,
        objective_trace=tuple(trace),
        iterations=len(trace) - 1,
        converged=converged,
        degenerate=degenerate,
        wall_time=time.perf_counter() - started,
        backtrack_events=backtrack_events,
        gradient_evals=gradient_evals,
        frozen_events=frozen_events,
        uniform_rows=uniform_rows,
    )
