"""Analytic gradients of the barrier penalty, certified against central finite differences.

The gradients are those of the closed-form log A,

    log A = ¼·log|Σa| + ¼·log|Σb| − ½·log|M| − ⅛·δᵀM⁻¹δ,   M = (Σa + Σb)/2,  δ = μa − μb,

taken in dense Σ coordinates; `fd_check` is the arbiter for any printed variant.
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .affinity import MixtureParams, PenaltyConfig, barrier_gap, penalty, separation
from .error import ContractViolation, DegenerateCovariance, require
from .gaussmath import GaussianComponent, SpdMatrix, cholesky

log = logging.getLogger(__name__)

ERROR_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class PairGeometry:
    m_inverse_delta: np.ndarray
    m: SpdMatrix
    delta: np.ndarray
    affinity: float
    log_affinity: float


@dataclass(frozen=True, eq=False)
class BarrierGradient:
    wrt_mean: np.ndarray
    wrt_cov: np.ndarray

    def __add__(self, other: "BarrierGradient") -> "BarrierGradient":
        return BarrierGradient(self.wrt_mean + other.wrt_mean, self.wrt_cov + other.wrt_cov)

    def scaled(self, factor: float) -> "BarrierGradient":
        return BarrierGradient(factor * self.wrt_mean, factor * self.wrt_cov)

    @classmethod
    def zeros(cls, dim: int) -> "BarrierGradient":
        return cls(np.zeros(dim), np.zeros((dim, dim)))


def pair_geometry(a: GaussianComponent, b: GaussianComponent) -> PairGeometry:
    if a.dim != b.dim:
        raise ContractViolation(f"Cannot pair components of dimension {a.dim} and {b.dim}")
    m = cholesky((a.covariance.dense + b.covariance.dense) / 2.0, escalate=False)
    delta = a.mean - b.mean
    m_inverse_delta = m.solve(delta)
    value = (0.25 * a.covariance.log_det + 0.25 * b.covariance.log_det) - 0.5 * m.log_det \
        - float(delta @ m_inverse_delta) / 8.0
    value = min(value, 0.0)
    return PairGeometry(m_inverse_delta, m, delta, float(np.exp(value)), value)


def _grad_from_geometry(a: GaussianComponent, geometry: PairGeometry) -> BarrierGradient:
    wrt_mean = -0.25 * geometry.m_inverse_delta
    wrt_cov = 0.25 * a.covariance.inverse - 0.25 * geometry.m.inverse \
        + np.outer(geometry.m_inverse_delta, geometry.m_inverse_delta) / 16.0
    return BarrierGradient(wrt_mean, (wrt_cov + wrt_cov.T) / 2.0)


def grad_log_affinity(a: GaussianComponent, b: GaussianComponent) -> BarrierGradient:
    """∇ log A(a, b) with respect to (μa, Σa)."""
    return _grad_from_geometry(a, pair_geometry(a, b))


def grad_barrier(theta: MixtureParams, k: int, cfg: PenaltyConfig) -> BarrierGradient:
    """Gradient of R_T(θ) with respect to (μ_k, Σ_k)."""
    require(0 <= k < theta.n_components, f"Component index {k} out of range")
    own = theta.components[k]
    total = BarrierGradient.zeros(theta.dim)
    for j, other in enumerate(theta.components):
        if j == k:
            continue
        geometry = pair_geometry(own, other)
        gap = barrier_gap(geometry.log_affinity)
        # d/dθ −log(1 − A) = A/(1 − A) · d/dθ log A
        total = total + _grad_from_geometry(own, geometry).scaled(geometry.affinity / gap)
    if cfg.lambda_sc:
        scale = BarrierGradient(2.0 * cfg.alpha * own.mean, 2.0 * cfg.beta * own.covariance.dense)
        total = total + scale.scaled(cfg.lambda_sc)
    return total


def _with_component(theta: MixtureParams, k: int, component: GaussianComponent) -> MixtureParams:
    components = list(theta.components)
    components[k] = component
    return MixtureParams(theta.weights, tuple(components))


def _central_difference(evaluate: Callable[[float], float], step: float) -> float:
    for attempt, h in enumerate((step, step * 0.1)):
        try:
            return (evaluate(h) - evaluate(-h)) / (2.0 * h)
        except DegenerateCovariance:
            if attempt:
                raise
            log.debug("Perturbation left the SPD cone, retrying with step %g", h * 0.1)


def _block_error(numeric: np.ndarray, analytic: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)),
                ERROR_FLOOR)
    return float(np.max(np.abs(numeric - analytic), initial=0.0)) / scale


def fd_check(theta: MixtureParams,
             cfg: PenaltyConfig,
             step: float = 1e-5,
             *,
             gradient: Callable[[MixtureParams, int, PenaltyConfig], BarrierGradient] = grad_barrier) -> float:
    """Largest blockwise relative error between `gradient` and central differences of `penalty`.

    Blocks are (component, mean) and (component, covariance); covariance directions are E_ii on the
    diagonal and E_ij + E_ji off it, each compared against ⟨G_Σ, D⟩.
    """
    require(0 < step <= 1e-3, "fd_check step must lie in (0, 1e-3]")
    require(theta.n_components < 2 or separation(theta) > 10 * step,
            "fd_check needs the configuration inside the barrier domain with margin")
    dim = theta.dim
    worst = 0.0
    for k, comp in enumerate(theta.components):
        analytic = gradient(theta, k, cfg)

        def at_mean(i, h):
            mean = comp.mean.copy()
            mean[i] += h
            return penalty(_with_component(theta, k, comp.copy(mean=mean)), cfg)

        def at_cov(direction, h):
            perturbed = cholesky(comp.covariance.dense + h * direction, escalate=False)
            return penalty(_with_component(theta, k, comp.copy(covariance=perturbed)), cfg)

        numeric_mean = np.array([_central_difference(lambda h: at_mean(i, h), step) for i in range(dim)])
        worst = max(worst, _block_error(numeric_mean, analytic.wrt_mean))

        numeric_cov, analytic_cov = [], []
        for i in range(dim):
            for j in range(i, dim):
                direction = np.zeros((dim, dim))
                direction[i, j] += 1.0
                if i != j:
                    direction[j, i] += 1.0
                numeric_cov.append(_central_difference(lambda h: at_cov(direction, h), step))
                analytic_cov.append(float(np.sum(analytic.wrt_cov * direction)))
        worst = max(worst, _block_error(np.array(numeric_cov), np.array(analytic_cov)))
    return worst


def random_theta(rng: np.random.Generator, dim: int, n_components: int, *,
                 min_separation: float = 0.05, mean_scale: float = 1.5) -> MixtureParams:
    """Well-conditioned random mixture with Δ(θ) ≥ min_separation."""
    for _ in range(1000):
        means = rng.normal(scale=mean_scale, size=(n_components, dim))
        covariances = []
        for _ in range(n_components):
            w = rng.normal(scale=0.5, size=(dim, dim))
            covariances.append(w @ w.T / dim + 0.5 * np.eye(dim))
        weights = rng.dirichlet(np.full(n_components, 5.0))
        theta = MixtureParams.from_dense(weights, means, covariances)
        if separation(theta) >= min_separation:
            return theta
    raise ContractViolation(f"Could not draw a separated configuration for d={dim}, K={n_components}")


def random_penalty(rng: np.random.Generator) -> PenaltyConfig:
    return PenaltyConfig(
        lambda_n=float(rng.uniform(0.01, 0.5)),
        lambda_wt=float(rng.uniform(0.0, 1.0)),
        lambda_sc=float(rng.uniform(0.0, 1.0)),
        alpha=float(rng.uniform(0.0, 0.5)),
        beta=float(rng.uniform(0.0, 0.5)),
    )
