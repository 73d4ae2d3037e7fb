"""Gaussian designs with structured covariances and their exact conditionals."""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import linalg

from src.data.seeding import RngSeed, rng_from
from src.errors import InvalidParameterError, NumericalError


SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Covariance:
    """Symmetric positive-definite covariance matrix with its Cholesky factor."""

    sigma: np.ndarray

    def __post_init__(self) -> None:
        sigma = np.array(self.sigma, dtype=float, copy=True)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise InvalidParameterError(f"Covariance must be square, got {sigma.shape}")
        if not np.all(np.isfinite(sigma)):
            raise InvalidParameterError("Covariance contains NaN or infinite values")
        if np.max(np.abs(sigma - sigma.T), initial=0.0) > SYMMETRY_TOL:
            raise InvalidParameterError("Covariance is not symmetric")
        try:
            chol = linalg.cholesky(sigma, lower=True)
        except linalg.LinAlgError as e:
            raise NumericalError(f"Covariance is not positive definite: {e}")
        sigma.flags.writeable = False
        chol.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_chol", chol)

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        """Lower-triangular factor L with L L^T = sigma."""
        return self._chol  # type: ignore[attr-defined]


def toeplitz_covariance(p: int, rho: float) -> Covariance:
    """
    AR(1) Toeplitz covariance with entries rho^|i-j|.

    Args:
        p: Dimension (at least 2)
        rho: Correlation in (-1, 1)

    Returns:
        Covariance instance
    """
    if p < 2:
        raise InvalidParameterError(f"p must be at least 2, got {p}")
    if not -1.0 < rho < 1.0:
        raise InvalidParameterError(f"rho must lie in (-1, 1), got {rho}")
    return Covariance(linalg.toeplitz(rho ** np.arange(p, dtype=float)))


def sample_gaussian(n: int, mean: np.ndarray, cov: Covariance, seed: RngSeed) -> np.ndarray:
    """
    Draw n i.i.d. rows from N(mean, cov).

    Args:
        n: Number of rows
        mean: Mean vector of length cov.p
        cov: Covariance
        seed: RNG seed

    Returns:
        (n, p) matrix
    """
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (cov.p,))
    if not np.all(np.isfinite(mean)):
        raise InvalidParameterError("Mean contains NaN or infinite values")
    z = rng_from(seed).standard_normal((n, cov.p))
    return mean + z @ cov.cholesky.T


def conditional_gaussian_weights(cov: Covariance, j: int) -> Tuple[np.ndarray, float]:
    """
    Regression weights and residual variance of coordinate j on the others.

    Solves Sigma_{-j,-j} w = Sigma_{-j,j} by Cholesky, so that
    E[X^j | X^{-j}] = mean_j + w . (x^{-j} - mean_{-j}) and
    Var(X^j | X^{-j}) = Sigma_{j,j} - Sigma_{j,-j} w.

    Returns:
        (w, sigma_cond) with w of length p-1 and sigma_cond >= 0
    """
    if not 0 <= j < cov.p:
        raise InvalidParameterError(f"Feature index {j} out of range for p={cov.p}")
    rest = np.delete(np.arange(cov.p), j)
    s_rr = cov.sigma[np.ix_(rest, rest)]
    s_rj = cov.sigma[rest, j]
    try:
        factor = linalg.cho_factor(s_rr, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Sigma_(-j,-j) is singular for j={j}: {e}")
    w = linalg.cho_solve(factor, s_rj)
    sigma_cond = max(float(cov.sigma[j, j] - s_rj @ w), 0.0)
    return w, sigma_cond


def conditional_gaussian_variance(cov: Covariance, j: int) -> float:
    """Var(X^j | X^{-j}); does not depend on the conditioning values."""
    return conditional_gaussian_weights(cov, j)[1]


def conditional_gaussian_params(
    cov: Covariance, mean: np.ndarray, j: int, x_minus_j: np.ndarray
) -> Tuple[Union[float, np.ndarray], float]:
    """
    Exact conditional mean and variance of X^j given X^{-j} = x_minus_j.

    Args:
        cov: Covariance of X
        mean: Mean of X (length p)
        j: Coordinate index
        x_minus_j: Conditioning values, length p-1, or a (rows, p-1) matrix

    Returns:
        (mu_cond, sigma_cond); mu_cond is an array when x_minus_j is a matrix
    """
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (cov.p,))
    x_minus_j = np.asarray(x_minus_j, dtype=float)
    if x_minus_j.shape[-1] != cov.p - 1:
        raise InvalidParameterError(
            f"x_minus_j must have {cov.p - 1} entries, got {x_minus_j.shape[-1]}"
        )
    w, sigma_cond = conditional_gaussian_weights(cov, j)
    mu = mean[j] + (x_minus_j - np.delete(mean, j)) @ w
    if np.ndim(mu) == 0:
        return float(mu), sigma_cond
    return mu, sigma_cond
