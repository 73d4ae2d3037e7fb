"""Variance of an importance estimate."""

import logging

import numpy as np

from src.data.seeding import RngSeed, rng_from
from src.errors import InvalidParameterError
from src.estimators.scores import ImportanceScore


logger = logging.getLogger(__name__)

MIN_BOOTSTRAP_REPS = 50
BOOTSTRAP_CHUNK = 64


def _diffs(score: ImportanceScore) -> np.ndarray:
    if score.n_test < 2:
        raise InvalidParameterError(f"Variance needs at least 2 test samples, got {score.n_test}")
    return score.per_sample_diffs


def variance_sample(score: ImportanceScore) -> float:
    """Sample variance of the per-sample differences divided by n_test."""
    diffs = _diffs(score)
    return float(np.var(diffs, ddof=1) / diffs.size)


def variance_bootstrap(score: ImportanceScore, reps: int, seed: RngSeed) -> float:
    """
    Bootstrap variance of the mean difference.

    Args:
        score: Importance score
        reps: Number of resamples (>= 50), each of size n_test with replacement
        seed: RNG seed

    Returns:
        Sample variance of the resampled means
    """
    if reps < MIN_BOOTSTRAP_REPS:
        raise InvalidParameterError(f"bootstrap_reps must be >= {MIN_BOOTSTRAP_REPS}, got {reps}")
    diffs = _diffs(score)
    rng = rng_from(seed)
    means = np.empty(reps)
    for start in range(0, reps, BOOTSTRAP_CHUNK):
        stop = min(start + BOOTSTRAP_CHUNK, reps)
        idx = rng.integers(0, diffs.size, size=(stop - start, diffs.size))
        means[start:stop] = diffs[idx].mean(axis=1)
    return float(np.var(means, ddof=1))


def influence_function(score: ImportanceScore) -> np.ndarray:
    """
    Plug-in influence values of the estimate, one per test sample.

    For a difference of mean losses this is the centered reduced-model loss
    minus the centered full-model loss, times the estimator's scaling. Scores
    read without their loss vectors fall back to the centered differences.
    """
    diffs = _diffs(score)
    full, reduced = score.loss_full, score.loss_reduced
    if full.size != score.n_test or reduced.size != score.n_test:
        return diffs - diffs.mean()
    return score.scale * ((reduced - reduced.mean()) - (full - full.mean()))


def variance_influence(score: ImportanceScore) -> float:
    """Influence-function variance: sum(phi^2) / ((n - 1) n)."""
    phi = influence_function(score)
    n = phi.size
    return float(np.sum(phi**2) / ((n - 1) * n))
