"""Hellinger affinity between Gaussian components and the barrier penalty built on it."""
import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .error import BarrierDomain, ContractViolation, require
from .gaussmath import GaussianComponent, cholesky, log_density, log_sum_exp

GAP_FLOOR = 1e-15
WEIGHT_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class MixtureParams:
    weights: np.ndarray
    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).reshape(-1)
        components = tuple(self.components)
        require(len(components) >= 1, "A mixture needs at least one component")
        require(weights.shape[0] == len(components),
                f"{weights.shape[0]} weights for {len(components)} components")
        require(bool(np.all(weights > 0)), "Mixture weights must be strictly positive")
        require(abs(math.fsum(weights) - 1.0) <= WEIGHT_SUM_TOLERANCE, "Mixture weights must sum to 1")
        dims = {c.dim for c in components}
        require(len(dims) == 1, f"Components disagree on dimension: {sorted(dims)}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @cached_property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    @property
    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])

    @property
    def covariances(self) -> np.ndarray:
        return np.stack([c.covariance.dense for c in self.components])

    @property
    def min_det(self) -> float:
        """Smallest covariance determinant, the degeneracy signal."""
        return min(math.exp(c.covariance.log_det) for c in self.components)

    def permuted(self, order: Sequence[int]) -> "MixtureParams":
        """Component i of the result is component order[i] of self."""
        order = list(order)
        require(sorted(order) == list(range(self.n_components)), "Not a permutation of the components")
        return MixtureParams(self.weights[order], tuple(self.components[i] for i in order))

    def copy(self, /, **changes) -> "MixtureParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dense(cls, weights, means, covariances, jitter: float = 0.0) -> "MixtureParams":
        components = tuple(GaussianComponent.from_dense(m, s, jitter) for m, s in zip(means, covariances))
        return cls(np.asarray(weights, dtype=float), components)


@dataclass(frozen=True)
class PenaltyConfig:
    lambda_n: Optional[float] = None
    """None resolves to the default schedule for the sample size being fitted"""
    lambda_wt: float = 1.0
    lambda_sc: float = 0.0
    alpha: float = 1e-3
    beta: float = 1e-3
    jitter: float = 1e-6

    def __post_init__(self):
        for name in ("lambda_wt", "lambda_sc", "alpha", "beta"):
            require(getattr(self, name) >= 0, f"{name} must be nonnegative")
        require(self.lambda_n is None or self.lambda_n >= 0, "lambda_n must be nonnegative")
        require(self.jitter > 0, "jitter must be positive")

    def copy(self, /, **changes) -> "PenaltyConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class PenaltyTerms:
    separation_barrier: float
    weight_barrier: float
    scale_regularizer: float
    total: float


def log_affinity(a: GaussianComponent, b: GaussianComponent) -> float:
    """log A(a, b), capped at 0 against rounding."""
    if a.dim != b.dim:
        raise ContractViolation(f"Cannot compare components of dimension {a.dim} and {b.dim}")
    midpoint = cholesky((a.covariance.dense + b.covariance.dense) / 2.0, escalate=False)
    whitened = midpoint.whiten(a.mean - b.mean)
    quadratic = float(whitened @ whitened)
    value = (0.25 * a.covariance.log_det + 0.25 * b.covariance.log_det) - 0.5 * midpoint.log_det - quadratic / 8.0
    return min(value, 0.0)


def hellinger_affinity(a: GaussianComponent, b: GaussianComponent) -> float:
    return float(np.clip(math.exp(log_affinity(a, b)), 0.0, 1.0))


def barrier_gap(log_a: float) -> float:
    """1 − A, floored at GAP_FLOOR; raises when A rounds to exactly 1."""
    gap = -math.expm1(log_a)
    if gap <= 0:
        raise BarrierDomain("Two components coincide (affinity 1), the separation barrier diverges")
    return max(gap, GAP_FLOOR)


def separation(theta: MixtureParams) -> float:
    """Δ(θ): smallest 1 − A over component pairs; 1.0 when K < 2."""
    if theta.n_components < 2:
        return 1.0
    return min(-math.expm1(log_affinity(a, b)) for a, b in combinations(theta.components, 2))


def penalty_terms(theta: MixtureParams, cfg: PenaltyConfig) -> PenaltyTerms:
    # fsum keeps every addend independent of component order
    separation_barrier = math.fsum(-math.log(barrier_gap(log_affinity(a, b)))
                                   for a, b in combinations(theta.components, 2))
    if np.any(theta.weights <= 0):
        raise BarrierDomain("A mixture weight reached 0, the weight barrier diverges")
    weight_barrier = -math.fsum(theta.log_weights)
    scale_regularizer = math.fsum(
        cfg.alpha * float(c.mean @ c.mean) + cfg.beta * c.covariance.frobenius_norm ** 2
        for c in theta.components
    )
    total = math.fsum([
        separation_barrier,
        cfg.lambda_wt * weight_barrier if cfg.lambda_wt else 0.0,
        cfg.lambda_sc * scale_regularizer if cfg.lambda_sc else 0.0,
    ])
    return PenaltyTerms(separation_barrier, weight_barrier, scale_regularizer, total)


def penalty(theta: MixtureParams, cfg: PenaltyConfig) -> float:
    return penalty_terms(theta, cfg).total


def weighted_log_densities(data: np.ndarray, theta: MixtureParams) -> np.ndarray:
    """n×K table of log π_k + log f(X_i; η_k)."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] != theta.dim:
        raise ContractViolation(f"Data has {data.shape[1]} columns, the mixture has dimension {theta.dim}")
    return np.column_stack([
        log_w + log_density(data, comp) for log_w, comp in zip(theta.log_weights, theta.components)
    ])


def mixture_log_density(data: np.ndarray, theta: MixtureParams) -> np.ndarray:
    table = weighted_log_densities(data, theta)
    # sorted so the row sums do not depend on the component order
    return log_sum_exp(np.sort(table, axis=1), axis=1)


def mean_log_likelihood(data: np.ndarray, theta: MixtureParams) -> float:
    return float(np.mean(mixture_log_density(data, theta)))


def objective(data: np.ndarray, theta: MixtureParams, cfg: PenaltyConfig) -> float:
    """J_n(θ) = mean log-likelihood − λ_n·R_T(θ). The penalty is not evaluated when λ_n = 0."""
    require(cfg.lambda_n is not None, "objective needs a resolved lambda_n")
    log_likelihood = mean_log_likelihood(data, theta)
    if cfg.lambda_n == 0:
        return log_likelihood
    return log_likelihood - cfg.lambda_n * penalty(theta, cfg)
