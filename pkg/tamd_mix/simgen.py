"""Seeded synthetic mixtures and initializers.

Every random draw comes from a Philox generator keyed by a seed plus a stream name, so a replication's data,
held-out set, initialization and Monte Carlo draws never share a sequence.
"""
import dataclasses
import hashlib
import logging
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg as la

from .affinity import MixtureParams, separation
from .error import ContractViolation, InitError, SpecError, require
from .gaussmath import GaussianComponent, cholesky

log = logging.getLogger(__name__)

INIT_TRIES = 100
CONTAMINANT = -1
BOX_INFLATION = 3.0
SEED_LIMIT = 2 ** 64


class DgpKind(StrEnum):
    WELL_SPECIFIED = "well_specified"
    ILL_CONDITIONED = "ill_conditioned"
    CONTAMINATED = "contaminated"
    HIGH_DIM = "high_dim"


class InitScheme(StrEnum):
    KMEANSPP_LIKE = "kmeanspp_like"
    PERTURBED_TRUTH = "perturbed_truth"
    RANDOM_POINTS = "random_points"


def _stream_key(name) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    return int.from_bytes(hashlib.blake2b(str(name).encode(), digest_size=4).digest(), "little")


def stream(seed: int, *names) -> np.random.Generator:
    """Independent Philox generator for (seed, names...)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_stream_key(n) for n in names))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class DgpSpec:
    kind: DgpKind = DgpKind.WELL_SPECIFIED
    n: int = 500
    d: int = 2
    k_true: int = 3
    separation_delta: float = 2.0
    """Minimum pairwise Euclidean distance between the true means"""
    condition_kappa: float = 1.0
    contamination_eps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", DgpKind(self.kind))
        except ValueError:
            raise SpecError(f"Unknown data-generating process {self.kind!r}") from None
        checks = [
            (self.n >= 1, "n must be positive"),
            (self.d >= 1, "d must be positive"),
            (self.k_true >= 1, "k_true must be positive"),
            (self.k_true < 2 or self.separation_delta > 0, "separation_delta must be positive"),
            (self.condition_kappa >= 1, "condition_kappa must be at least 1"),
            (0 <= self.contamination_eps < 0.5, "contamination_eps must lie in [0, 0.5)"),
            (0 <= self.seed < SEED_LIMIT, "seed must be a 64-bit unsigned integer"),
            (self.d >= self.k_true - 1, f"{self.k_true} simplex means need d >= {self.k_true - 1}, got d={self.d}"),
            (self.condition_kappa == 1 or self.d >= 2, "condition_kappa > 1 needs d >= 2"),
        ]
        if self.kind in (DgpKind.WELL_SPECIFIED, DgpKind.HIGH_DIM):
            checks.append((self.condition_kappa == 1, f"{self.kind} uses identity covariances, set condition_kappa = 1"))
        if self.kind != DgpKind.CONTAMINATED and self.kind != DgpKind.HIGH_DIM:
            checks.append((self.contamination_eps == 0, f"{self.kind} has no contamination, set contamination_eps = 0"))
        for ok, message in checks:
            if not ok:
                raise SpecError(message)

    def copy(self, /, **changes) -> "DgpSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class LabeledSample:
    data: np.ndarray
    labels: np.ndarray
    truth: MixtureParams

    @cached_property
    def hellinger_separation(self) -> float:
        return separation(self.truth)

    @property
    def contaminant_fraction(self) -> float:
        return float(np.mean(self.labels == CONTAMINANT))


def simplex_means(n_components: int, dim: int, delta: float) -> np.ndarray:
    """Vertices of a regular simplex with edge length delta, zero-padded into dim coordinates."""
    if n_components == 1:
        return np.zeros((1, dim))
    if dim < n_components - 1:
        raise SpecError(f"{n_components} simplex means need d >= {n_components - 1}, got d={dim}")
    # rows of the Helmert matrix are orthonormal and orthogonal to the ones vector, so its columns are
    # equidistant points at distance sqrt(2)
    vertices = la.helmert(n_components).T * (delta / np.sqrt(2.0))
    means = np.zeros((n_components, dim))
    means[:, :n_components - 1] = vertices
    return means


def component_covariance(dim: int, kappa: float) -> np.ndarray:
    if kappa == 1:
        return np.eye(dim)
    return np.diag(np.geomspace(kappa ** -0.5, kappa ** 0.5, dim))


def truth_params(spec: DgpSpec) -> MixtureParams:
    means = simplex_means(spec.k_true, spec.d, spec.separation_delta)
    covariance = component_covariance(spec.d, spec.condition_kappa)
    weights = np.full(spec.k_true, 1.0 / spec.k_true)
    return MixtureParams.from_dense(weights, means, [covariance] * spec.k_true)


def sample_mixture(theta: MixtureParams, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """n labelled draws from theta."""
    require(n >= 0, "Sample size must be nonnegative")
    labels = rng.choice(theta.n_components, size=n, p=theta.weights)
    noise = rng.standard_normal((n, theta.dim))
    data = np.empty((n, theta.dim))
    for k, comp in enumerate(theta.components):
        rows = labels == k
        data[rows] = comp.mean + noise[rows] @ comp.covariance.lower_factor.T
    return data, labels


def _contaminants(clean: np.ndarray, count: int, truth: MixtureParams, rng: np.random.Generator) -> np.ndarray:
    reference = clean if len(clean) else truth.means
    low, high = reference.min(axis=0), reference.max(axis=0)
    centre, half_width = (low + high) / 2.0, (high - low) / 2.0 * BOX_INFLATION
    return rng.uniform(centre - half_width, centre + half_width, size=(count, clean.shape[1]))


def generate(spec: DgpSpec) -> LabeledSample:
    rng = stream(spec.seed, "data")
    truth = truth_params(spec)
    n_contaminants = int(rng.binomial(spec.n, spec.contamination_eps)) if spec.contamination_eps > 0 else 0
    clean, labels = sample_mixture(truth, spec.n - n_contaminants, rng)
    if not n_contaminants:
        return LabeledSample(clean, labels, truth)
    data = np.vstack([clean, _contaminants(clean, n_contaminants, truth, rng)])
    labels = np.concatenate([labels, np.full(n_contaminants, CONTAMINANT)])
    order = rng.permutation(spec.n)
    log.debug("Generated %d points with %d contaminants", spec.n, n_contaminants)
    return LabeledSample(data[order], labels[order], truth)


def _kmeanspp_indices(data: np.ndarray, n_components: int, rng: np.random.Generator) -> list[int]:
    n = data.shape[0]
    chosen = [int(rng.integers(n))]
    distances = np.sum((data - data[chosen[0]]) ** 2, axis=1)
    for _ in range(1, n_components):
        total = distances.sum()
        probabilities = distances / total if total > 0 else np.full(n, 1.0 / n)
        index = int(rng.choice(n, p=probabilities))
        chosen.append(index)
        distances = np.minimum(distances, np.sum((data - data[index]) ** 2, axis=1))
    return chosen


def _overall_covariance(data: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.cov(data, rowvar=False, bias=True))


def init_random(data: np.ndarray,
                n_components: int,
                scheme: InitScheme | str,
                rng: np.random.Generator,
                *,
                truth: Optional[MixtureParams] = None,
                noise_scale: float = 0.0) -> MixtureParams:
    """Initial parameters with Δ(θ) > 0, resampled up to INIT_TRIES times."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n, dim = data.shape
    require(n >= n_components, f"Need at least {n_components} points, got {n}")
    scheme = InitScheme(scheme)
    if scheme == InitScheme.PERTURBED_TRUTH:
        if truth is None:
            raise ContractViolation("perturbed_truth initialization needs the true parameters")
        require(truth.n_components == n_components and truth.dim == dim, "Truth does not match the requested shape")
        require(noise_scale >= 0, "noise_scale must be nonnegative")
        if noise_scale == 0:
            return truth
    else:
        covariance = cholesky(_overall_covariance(data))
        weights = np.full(n_components, 1.0 / n_components)

    for attempt in range(INIT_TRIES):
        if scheme == InitScheme.PERTURBED_TRUTH:
            components = tuple(c.copy(mean=c.mean + rng.normal(scale=noise_scale, size=dim))
                               for c in truth.components)
            theta = MixtureParams(truth.weights, components)
        else:
            if scheme == InitScheme.KMEANSPP_LIKE:
                indices = _kmeanspp_indices(data, n_components, rng)
            else:
                indices = rng.choice(n, size=n_components, replace=False)
            theta = MixtureParams(weights, tuple(GaussianComponent(data[i], covariance) for i in indices))
        if n_components < 2 or separation(theta) > 0:
            return theta
        log.debug("Initialization attempt %d had coincident components, resampling", attempt + 1)
    raise InitError(f"No positively separated {scheme} initialization in {INIT_TRIES} tries")
