"""Benchmark metrics."""

from typing import Sequence, Union

import numpy as np
from scipy import stats

from src.benchmarks.generators import GroundTruth
from src.errors import InvalidParameterError


def _mask(truth: Union[GroundTruth, np.ndarray]) -> np.ndarray:
    if isinstance(truth, GroundTruth):
        return truth.active_set.astype(bool)
    return np.asarray(truth, dtype=bool)


def metric_auc(estimates: np.ndarray, truth: Union[GroundTruth, np.ndarray]) -> float:
    """
    Rank AUC of the estimates for separating active from null features.

    Probability that a random (active, null) pair is ordered correctly, ties
    counting 1/2.

    Args:
        estimates: One importance per feature
        truth: Ground truth or boolean active mask

    Raises:
        InvalidParameterError: Length mismatch, or no active / no null feature
    """
    estimates = np.asarray(estimates, dtype=float).reshape(-1)
    active = _mask(truth).reshape(-1)
    if estimates.size != active.size:
        raise InvalidParameterError(
            f"Got {estimates.size} estimates for {active.size} features"
        )
    n_pos = int(active.sum())
    n_neg = active.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InvalidParameterError("AUC is undefined without both active and null features")
    ranks = stats.rankdata(estimates, method="average")
    u = ranks[active].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def mean_bias(estimates: np.ndarray, tsi: np.ndarray, mask: np.ndarray) -> float:
    """
    Mean of estimate - tsi over the masked features.

    ``estimates`` may stack repetitions along the first axis.
    """
    estimates = np.asarray(estimates, dtype=float)
    tsi = np.asarray(tsi, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return float("nan")
    return float(np.mean((estimates - tsi)[..., mask]))


def rejection_rate(rejects: np.ndarray, mask: np.ndarray) -> float:
    """Share of rejections among the masked features (power or type-I error)."""
    rejects = np.asarray(rejects, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return float("nan")
    return float(np.mean(rejects[..., mask]))


def log_log_slope(ns: Sequence[float], biases: Sequence[float]) -> float:
    """Least-squares slope of log|bias| against log n."""
    ns = np.asarray(ns, dtype=float)
    biases = np.abs(np.asarray(biases, dtype=float))
    if ns.size != biases.size or ns.size < 2:
        raise InvalidParameterError("Need at least two matching (n, bias) pairs")
    if np.any(ns <= 0) or np.any(biases <= 0):
        raise InvalidParameterError("Sample sizes and biases must be nonzero for a log-log fit")
    slope, _ = np.polyfit(np.log(ns), np.log(biases), 1)
    return float(slope)
