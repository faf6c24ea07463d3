"""Evaluation metrics for a fitted mixture against its generating truth."""
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score

from .affinity import MixtureParams, mean_log_likelihood, mixture_log_density
from .error import ContractViolation, require
from .simgen import CONTAMINANT, LabeledSample, sample_mixture
from .tamd import DEGENERACY_DET_THRESHOLD, FitResult, predict

LOG_2 = math.log(2.0)
COST_TOLERANCE = 1e-12


@dataclass(frozen=True)
class HellingerEstimate:
    distance: float
    std_error: float


@dataclass(frozen=True)
class MetricsReport:
    success: bool
    mean_mse: float
    cov_frobenius_error: float
    hellinger_to_truth: float
    hellinger_se: float
    ari: float
    accuracy: float
    heldout_loglik: float
    matching: tuple[int, ...]

    def as_row(self) -> dict:
        """Flat mapping, matching rendered as space-separated indices."""
        row = asdict(self)
        row["matching"] = " ".join(str(i) for i in self.matching)
        return row


def is_success(theta: MixtureParams, degenerate: bool = False, threshold: float = DEGENERACY_DET_THRESHOLD) -> bool:
    return not degenerate and theta.min_det > threshold


def _mean_costs(est: MixtureParams, truth: MixtureParams) -> np.ndarray:
    """cost[k, j] = ‖μ_truth_k − μ_est_j‖²"""
    diff = truth.means[:, None, :] - est.means[None, :, :]
    return np.sum(diff ** 2, axis=2)


def match_labels(est: MixtureParams, truth: MixtureParams) -> tuple[int, ...]:
    """σ with σ[k] the estimated component matched to true component k.

    Minimum total squared mean distance; among optimal assignments the lexicographically smallest σ wins.
    """
    if est.n_components != truth.n_components or est.dim != truth.dim:
        raise ContractViolation(f"Cannot match K={est.n_components}, d={est.dim} against "
                                f"K={truth.n_components}, d={truth.dim}")
    costs = _mean_costs(est, truth)
    rows, cols = linear_sum_assignment(costs)
    optimum = float(costs[rows, cols].sum())
    slack = COST_TOLERANCE * max(1.0, optimum)

    size = est.n_components
    matching: list[int] = []
    for k in range(size):
        remaining_rows = list(range(k + 1, size))
        for j in range(size):
            if j in matching:
                continue
            free_cols = [c for c in range(size) if c not in matching and c != j]
            fixed = float(sum(costs[r, c] for r, c in enumerate(matching))) + float(costs[k, j])
            if remaining_rows:
                sub = costs[np.ix_(remaining_rows, free_cols)]
                sub_rows, sub_cols = linear_sum_assignment(sub)
                fixed += float(sub[sub_rows, sub_cols].sum())
            if fixed <= optimum + slack:
                matching.append(j)
                break
    return tuple(matching)


def parameter_errors(est: MixtureParams, truth: MixtureParams,
                     matching: Optional[Sequence[int]] = None) -> tuple[float, float]:
    """(mean squared mean error, mean covariance Frobenius error) after label matching."""
    matching = match_labels(est, truth) if matching is None else tuple(matching)
    mean_errors = [float(np.sum((est.components[j].mean - t.mean) ** 2)) for t, j in zip(truth.components, matching)]
    cov_errors = [float(np.linalg.norm(est.components[j].covariance.dense - t.covariance.dense, "fro"))
                  for t, j in zip(truth.components, matching)]
    return float(np.mean(mean_errors)), float(np.mean(cov_errors))


def hellinger_mc(p: MixtureParams, q: MixtureParams, draws: int, rng: np.random.Generator) -> HellingerEstimate:
    """Hellinger distance between two mixtures by importance sampling from (p + q)/2."""
    require(draws >= 2, "hellinger_mc needs at least 2 draws")
    require(p.dim == q.dim, f"Cannot compare mixtures of dimension {p.dim} and {q.dim}")
    from_p = int(np.count_nonzero(rng.random(draws) < 0.5))
    points = np.vstack([sample_mixture(p, from_p, rng)[0], sample_mixture(q, draws - from_p, rng)[0]])
    log_p = mixture_log_density(points, p)
    log_q = mixture_log_density(points, q)
    # √(pq) / ((p + q)/2), at most 1
    ratio = np.exp(np.minimum(0.5 * (log_p + log_q) - (np.logaddexp(log_p, log_q) - LOG_2), 0.0))
    squared = 1.0 - float(np.mean(ratio))
    squared_se = float(np.std(ratio, ddof=1)) / math.sqrt(draws)
    distance = math.sqrt(min(max(squared, 0.0), 1.0))
    std_error = squared_se / (2.0 * distance) if distance > 0 else math.sqrt(squared_se)
    return HellingerEstimate(distance, std_error)


def adjusted_rand_index(labels_a, labels_b) -> float:
    a, b = np.asarray(labels_a), np.asarray(labels_b)
    require(a.shape == b.shape, f"Label vectors differ in length: {a.shape} vs {b.shape}")
    kept = (a != CONTAMINANT) & (b != CONTAMINANT)
    if np.count_nonzero(kept) < 2:
        raise ContractViolation("Adjusted Rand index needs at least 2 non-contaminant points")
    return float(adjusted_rand_score(a[kept], b[kept]))


def classification_accuracy(true_labels, predicted, matching: Sequence[int]) -> float:
    """Share of non-contaminant points whose predicted component maps to their true one."""
    truth, predicted = np.asarray(true_labels), np.asarray(predicted)
    require(truth.shape == predicted.shape, "Label vectors differ in length")
    to_truth = np.empty(len(matching), dtype=int)
    to_truth[list(matching)] = np.arange(len(matching))
    kept = truth != CONTAMINANT
    require(bool(np.any(kept)), "Accuracy needs at least one non-contaminant point")
    return float(np.mean(to_truth[predicted[kept]] == truth[kept]))


def heldout_loglik(test_data: np.ndarray, est: MixtureParams) -> float:
    return mean_log_likelihood(test_data, est)


def score_fit(result: FitResult, sample: LabeledSample, heldout: np.ndarray, rng: np.random.Generator,
              hellinger_draws: int = 10_000) -> MetricsReport:
    est, truth = result.params, sample.truth
    matching = match_labels(est, truth)
    mean_mse, cov_error = parameter_errors(est, truth, matching)
    hellinger = hellinger_mc(est, truth, hellinger_draws, rng)
    predicted = predict(sample.data, est)
    return MetricsReport(
        success=is_success(est, result.degenerate),
        mean_mse=mean_mse,
        cov_frobenius_error=cov_error,
        hellinger_to_truth=hellinger.distance,
        hellinger_se=hellinger.std_error,
        ari=adjusted_rand_index(sample.labels, predicted),
        accuracy=classification_accuracy(sample.labels, predicted, matching),
        heldout_loglik=heldout_loglik(heldout, est),
        matching=matching,
    )
