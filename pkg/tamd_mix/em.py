"""Plain EM baseline with random restarts and the covariance-determinant degeneracy detector."""
import dataclasses
import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .affinity import MixtureParams, mean_log_likelihood
from .error import DegenerateCovariance, require
from .gaussmath import GaussianComponent
from .simgen import InitScheme, init_random
from .tamd import FitResult, e_step, weighted_statistics

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 500
    convergence_tol: float = 1e-8
    restarts: int = 1
    degeneracy_det_threshold: float = 1e-6
    safeguard: float = 1e-12
    """Jitter added to every M-step covariance"""
    init_scheme: InitScheme = InitScheme.KMEANSPP_LIKE
    """Initializer used for restarts beyond a supplied init"""

    def __post_init__(self):
        require(self.max_iters >= 1, "max_iters must be positive")
        require(self.convergence_tol > 0, "convergence_tol must be positive")
        require(self.restarts >= 1, "restarts must be positive")
        require(self.degeneracy_det_threshold > 0, "degeneracy_det_threshold must be positive")
        require(self.safeguard >= 0, "safeguard must be nonnegative")
        object.__setattr__(self, "init_scheme", InitScheme(self.init_scheme))

    def copy(self, /, **changes) -> "EmConfig":
        return dataclasses.replace(self, **changes)


def _m_step(data: np.ndarray, theta: MixtureParams, cfg: EmConfig) -> Optional[MixtureParams]:
    resp = e_step(data, theta)
    weights = resp.column_mass / data.shape[0]
    if not np.all(weights > 0):
        log.warning("EM emptied a component")
        return None
    try:
        components = []
        for k in range(theta.n_components):
            mean, scatter = weighted_statistics(data, resp, k)
            components.append(GaussianComponent.from_dense(mean, scatter, cfg.safeguard))
    except DegenerateCovariance as e:
        log.warning("EM covariance collapsed: %s", e)
        return None
    return MixtureParams(weights, tuple(components))


def em_fit(data: np.ndarray, init: MixtureParams, cfg: EmConfig = EmConfig()) -> FitResult:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    require(data.shape[1] == init.dim, f"Data has {data.shape[1]} columns, init has dimension {init.dim}")
    started = time.perf_counter()
    theta = init
    current = mean_log_likelihood(data, theta)
    trace = [current]
    converged = False
    degenerate = theta.min_det <= cfg.degeneracy_det_threshold

    for iteration in range(cfg.max_iters):
        if degenerate:
            break
        proposal = _m_step(data, theta, cfg)
        if proposal is None:
            degenerate = True
            break
        previous, theta = current, proposal
        current = mean_log_likelihood(data, theta)
        trace.append(current)
        log.debug("EM iteration %d log-likelihood %.12g", iteration + 1, current)
        if theta.min_det <= cfg.degeneracy_det_threshold:
            log.info("EM degenerated at iteration %d (min det %.3g)", iteration + 1, theta.min_det)
            degenerate = True
            break
        if abs(current - previous) <= cfg.convergence_tol * max(1.0, abs(previous)):
            converged = True
            break

    return FitResult(
        params=theta,
        objective_trace=tuple(trace),
        iterations=len(trace) - 1,
        converged=converged,
        degenerate=degenerate,
        wall_time=time.perf_counter() - started,
        method="em",
    )


def em_fit_restarts(data: np.ndarray,
                    n_components: int,
                    cfg: EmConfig,
                    rng: np.random.Generator,
                    *,
                    init: Optional[MixtureParams] = None) -> FitResult:
    """Best healthy EM run over `cfg.restarts` initializations; the best degenerate one when none is healthy.

    When `init` is given it seeds the first restart, the rest are drawn with `cfg.init_scheme`.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    results = []
    for restart in range(cfg.restarts):
        start = init if restart == 0 and init is not None else \
            init_random(data, n_components, cfg.init_scheme, rng)
        results.append(em_fit(data, start, cfg))
    healthy = [r for r in results if not r.degenerate]
    best = max(healthy or results, key=lambda r: r.final_objective)
    if not healthy:
        log.info("All %d EM restarts degenerated", cfg.restarts)
    return best
