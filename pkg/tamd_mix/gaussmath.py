"""Multivariate Gaussian primitives shared by every estimator.

Covariances are held as lower Cholesky factors; dense matrices only appear at module boundaries.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la
from scipy.special import logsumexp

from .error import ContractViolation, DegenerateCovariance, require

LOG_2PI = float(np.log(2.0 * np.pi))

JITTER_GROWTH = 10.0
JITTER_CAP_FRACTION = 1e-2
JITTER_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    lower_factor: np.ndarray

    def __post_init__(self):
        factor = np.asarray(self.lower_factor, dtype=float)
        require(factor.ndim == 2 and factor.shape[0] == factor.shape[1], "Cholesky factor must be square")
        require(np.all(np.diag(factor) > 0), "Cholesky factor needs a strictly positive diagonal")
        factor = np.tril(factor)
        factor.setflags(write=False)
        object.__setattr__(self, "lower_factor", factor)

    @property
    def dim(self) -> int:
        return self.lower_factor.shape[0]

    @cached_property
    def dense(self) -> np.ndarray:
        product = self.lower_factor @ self.lower_factor.T
        product = (product + product.T) / 2.0
        product.setflags(write=False)
        return product

    @cached_property
    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.lower_factor))))

    @cached_property
    def inverse(self) -> np.ndarray:
        inverse = la.cho_solve((self.lower_factor, True), np.eye(self.dim))
        inverse = (inverse + inverse.T) / 2.0
        inverse.setflags(write=False)
        return inverse

    @cached_property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.dense, "fro"))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return la.cho_solve((self.lower_factor, True), rhs)

    def whiten(self, rhs: np.ndarray) -> np.ndarray:
        """L⁻¹·rhs"""
        return la.solve_triangular(self.lower_factor, rhs, lower=True, check_finite=False)

    @classmethod
    def identity(cls, dim: int) -> "SpdMatrix":
        return cls(np.eye(dim))


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    mean: np.ndarray
    covariance: SpdMatrix

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        require(mean.shape[0] == self.covariance.dim,
                f"Mean length {mean.shape[0]} does not match covariance dim {self.covariance.dim}")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.covariance.dim

    @classmethod
    def from_dense(cls, mean, covariance, jitter: float = 0.0) -> "GaussianComponent":
        return cls(np.asarray(mean, dtype=float), cholesky(covariance, jitter))

    def copy(self, *, mean=None, covariance=None) -> "GaussianComponent":
        return GaussianComponent(self.mean if mean is None else mean,
                                 self.covariance if covariance is None else covariance)


def log_density(x, comp: GaussianComponent):
    """Gaussian log-density of one point (1-d input) or of every row of an n×d matrix."""
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[1] != comp.dim:
        raise ContractViolation(f"Point dimension {points.shape[1]} does not match component dimension {comp.dim}")
    whitened = comp.covariance.whiten((points - comp.mean).T)
    mahalanobis = np.sum(whitened ** 2, axis=0)
    values = -0.5 * comp.dim * LOG_2PI - 0.5 * comp.covariance.log_det - 0.5 * mahalanobis
    return float(values[0]) if single else values


def log_sum_exp(values, axis=None):
    values = np.asarray(values, dtype=float)
    require(values.size > 0, "log_sum_exp needs at least one value")
    result = logsumexp(values, axis=axis)
    return float(result) if np.ndim(result) == 0 else result


def cholesky(dense, jitter: float = 0.0, *, escalate: bool = True) -> SpdMatrix:
    """Factor (A + Aᵀ)/2 + jitter·I, growing the jitter ×10 up to 1e-2·trace/d when the factorization fails."""
    matrix = np.asarray(dense, dtype=float)
    require(matrix.ndim == 2 and matrix.shape[0] == matrix.shape[1], "cholesky needs a square matrix")
    require(jitter >= 0, "jitter must be nonnegative")
    matrix = (matrix + matrix.T) / 2.0
    dim = matrix.shape[0]
    if not np.all(np.isfinite(matrix)):
        raise DegenerateCovariance("Covariance has non-finite entries", matrix)

    scale = float(np.trace(matrix)) / dim
    if scale <= 0:
        scale = 1.0
    cap = JITTER_CAP_FRACTION * scale
    current = jitter
    identity = np.eye(dim)
    while True:
        try:
            factor = la.cholesky(matrix + current * identity, lower=True)
            if np.all(np.diag(factor) > 0):
                return SpdMatrix(factor)
        except la.LinAlgError:
            pass
        if not escalate:
            break
        current = current * JITTER_GROWTH if current > 0 else JITTER_FLOOR * scale
        if current > cap:
            break
    raise DegenerateCovariance(f"Matrix not positive definite after jitter up to {min(current, cap):.3g}", matrix)
