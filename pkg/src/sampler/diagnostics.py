"""One-dimensional Wasserstein diagnostics for conditional samplers."""

from typing import Optional

import numpy as np
from scipy import stats

from src.data.gaussian import Covariance, conditional_gaussian_params
from src.data.seeding import RngSeed
from src.errors import InvalidParameterError
from src.sampler.conditional import ConditionalSampler, draw_column


QUANTILE_GRID = 1000


def _grid(size: int) -> np.ndarray:
    return (np.arange(size) + 0.5) / size


def wasserstein2_1d(a: np.ndarray, b: np.ndarray) -> float:
    """
    2-Wasserstein distance between two empirical distributions on the line.

    Equal-length samples are coupled by sorting. Otherwise both empirical
    quantile functions are evaluated on a common grid of 1000 levels.

    Args:
        a: First sample (nonempty)
        b: Second sample (nonempty)

    Returns:
        Nonnegative distance
    """
    a = np.sort(np.asarray(a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    if a.size == 0 or b.size == 0:
        raise InvalidParameterError("wasserstein2_1d needs two nonempty samples")
    if a.size != b.size:
        levels = _grid(QUANTILE_GRID)
        a = np.quantile(a, levels, method="inverted_cdf")
        b = np.quantile(b, levels, method="inverted_cdf")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def gaussian_reference(sigma2: float, size: int = QUANTILE_GRID) -> np.ndarray:
    """Quantiles of N(0, sigma2) on a midpoint grid of ``size`` levels."""
    return np.sqrt(sigma2) * stats.norm.ppf(_grid(size))


def conditional_draw_w2(
    sampler: ConditionalSampler,
    x_test: np.ndarray,
    cov: Covariance,
    seed: RngSeed,
    mean: Optional[np.ndarray] = None,
) -> float:
    """
    W2 between sampled j-coordinates and the exact Gaussian conditional law.

    Draws are centered by the exact conditional mean of each test row and the
    pooled result is compared with N(0, sigma_cond), so both the regression
    error of nu_{-j} and the residual law enter the distance.
    """
    mean = np.zeros(cov.p) if mean is None else mean
    j = sampler.j
    drawn = draw_column(sampler, x_test, 1, seed)[:, 0]
    mu, sigma_cond = conditional_gaussian_params(cov, mean, j, np.delete(x_test, j, axis=1))
    return wasserstein2_1d(drawn - mu, gaussian_reference(sigma_cond))
