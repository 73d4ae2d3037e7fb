"""Total Sobol index oracles: closed forms and nested Monte Carlo."""

import logging
from typing import Callable, Optional

import numpy as np

from src.data.gaussian import (
    Covariance,
    conditional_gaussian_variance,
    conditional_gaussian_weights,
)
from src.data.seeding import RngSeed, derive_seed, rng_from
from src.errors import InvalidParameterError


logger = logging.getLogger(__name__)

RegressionFunction = Callable[[np.ndarray], np.ndarray]

# Upper bound on floats materialized per Monte-Carlo chunk.
CHUNK_FLOATS = 2_000_000


def linear_tsi(beta: np.ndarray, cov: Covariance) -> np.ndarray:
    """beta_j^2 * Var(X^j | X^{-j}) for every feature."""
    beta = np.asarray(beta, dtype=float)
    return np.array(
        [beta[j] ** 2 * conditional_gaussian_variance(cov, j) for j in range(cov.p)]
    )


def gated_product_tsi(cov: Covariance, j: int, partner: int, weight: float) -> float:
    """
    TSI of a factor of the term ``weight * X^j * X^partner * I(gate)``.

    With centered Gaussian X and a gate given by the sign of another
    coordinate, E[(X^partner)^2 I(gate)] = Sigma_{partner,partner} / 2 and the
    conditional residual of X^j is independent of X^{-j}.
    """
    return weight**2 * cov.sigma[partner, partner] / 2.0 * conditional_gaussian_variance(cov, j)


def tsi_oracle_montecarlo(
    regression: RegressionFunction,
    cov: Covariance,
    j: int,
    n_outer: int,
    n_inner: int,
    seed: RngSeed,
    mean: Optional[np.ndarray] = None,
) -> float:
    """
    Nested Monte-Carlo estimate of E[(m(X) - m_{-j}(X^{-j}))^2].

    Outer rows X are drawn from N(mean, cov); for each, n_inner copies
    resample X^j from its exact Gaussian conditional. The squared gap between
    m(X) and the inner average overestimates the index by a factor
    (1 + 1/n_inner), which is divided out.

    Args:
        regression: Vectorized m, (rows, p) -> (rows,)
        cov: Covariance of X
        j: Feature index
        n_outer: Outer draws
        n_inner: Conditional draws per outer row
        seed: RNG seed
        mean: Mean of X (default zero)

    Returns:
        Nonnegative estimate
    """
    if n_outer < 1 or n_inner < 1:
        raise InvalidParameterError("n_outer and n_inner must be positive")
    if not 0 <= j < cov.p:
        raise InvalidParameterError(f"Feature index {j} out of range for p={cov.p}")
    p = cov.p
    mean = np.zeros(p) if mean is None else np.broadcast_to(np.asarray(mean, dtype=float), (p,))
    w, sigma_cond = conditional_gaussian_weights(cov, j)
    scale = np.sqrt(sigma_cond)
    rows_per_chunk = max(1, CHUNK_FLOATS // (n_inner * p))
    total = 0.0
    for chunk, start in enumerate(range(0, n_outer, rows_per_chunk)):
        rows = min(rows_per_chunk, n_outer - start)
        rng = rng_from(derive_seed(seed, chunk))
        x = mean + rng.standard_normal((rows, p)) @ cov.cholesky.T
        mu = mean[j] + (np.delete(x, j, axis=1) - np.delete(mean, j)) @ w
        copies = np.repeat(x[:, None, :], n_inner, axis=1)
        copies[:, :, j] = mu[:, None] + scale * rng.standard_normal((rows, n_inner))
        inner = np.asarray(regression(copies.reshape(rows * n_inner, p)), dtype=float)
        inner_mean = inner.reshape(rows, n_inner).mean(axis=1)
        total += float(np.sum((np.asarray(regression(x), dtype=float) - inner_mean) ** 2))
    estimate = total / n_outer * n_inner / (n_inner + 1.0)
    logger.debug(f"Monte-Carlo TSI for feature {j}: {estimate:.6g} ({n_outer}x{n_inner})")
    return max(estimate, 0.0)
