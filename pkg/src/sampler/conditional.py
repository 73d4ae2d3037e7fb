"""Residual-permutation conditional sampler.

A draw for test row i keeps every coordinate of x_i except j, which becomes

    nu_{-j}(x_i^{-j}) + r_k,

where nu_{-j} regresses X^j on X^{-j} and r_k is a residual
x_k^j - nu_{-j}(x_k^{-j}) taken from the sampler's training pool.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from src.data.dataset import check_feature_index
from src.data.gaussian import Covariance, conditional_gaussian_weights
from src.data.seeding import RngSeed, rng_from
from src.errors import InvalidParameterError
from src.learners.base import FittedModel, LearnerSpec, as_matrix
from src.learners.fitting import fit


logger = logging.getLogger(__name__)

SamplingScheme = Literal["resample", "permute"]

DEGENERATE_POOL_VAR = 1e-14


@dataclass(frozen=True, eq=False)
class ConditionalSampler:
    """
    Fitted nu_{-j} with the residual pool it was trained on.

    Attributes:
        j: Resampled coordinate
        nu_model: Regression of X^j on X^{-j} (input_dim = p - 1)
        residual_pool: In-sample residuals of nu_model (read-only)
        scheme: ``resample`` (i.i.d. with replacement per row and slot) or
            ``permute`` (one permutation of the pool per calibration slot)
        degenerate: Pool variance below 1e-14; draws are deterministic
    """

    j: int
    nu_model: FittedModel
    residual_pool: np.ndarray
    scheme: SamplingScheme = "resample"
    degenerate: bool = False

    def __post_init__(self) -> None:
        pool = np.array(self.residual_pool, dtype=float, copy=True).reshape(-1)
        if pool.size < 2:
            raise InvalidParameterError("Residual pool needs at least 2 entries")
        if not np.all(np.isfinite(pool)):
            raise InvalidParameterError("Residual pool contains NaN or infinite values")
        if self.scheme not in ("resample", "permute"):
            raise InvalidParameterError(f"Unknown sampling scheme '{self.scheme}'")
        pool.flags.writeable = False
        object.__setattr__(self, "residual_pool", pool)
        if float(np.var(pool)) < DEGENERATE_POOL_VAR:
            object.__setattr__(self, "degenerate", True)

    @property
    def pool_size(self) -> int:
        return int(self.residual_pool.size)

    @property
    def p(self) -> int:
        return self.nu_model.input_dim + 1


def sampler_from_model(
    x_train: np.ndarray, j: int, nu_model: FittedModel, scheme: SamplingScheme = "resample"
) -> ConditionalSampler:
    """
    Build a sampler around an already fitted nu_{-j}.

    The residual pool is computed on ``x_train``.
    """
    x_train = as_matrix(x_train)
    check_feature_index(j, x_train.shape[1])
    x_rest = np.delete(x_train, j, axis=1)
    pool = x_train[:, j] - nu_model.predict(x_rest)
    sampler = ConditionalSampler(j=j, nu_model=nu_model, residual_pool=pool, scheme=scheme)
    if sampler.degenerate:
        logger.warning(f"Residual pool for feature {j} is degenerate; draws are deterministic")
    return sampler


def fit_sampler(
    x_train: np.ndarray,
    j: int,
    spec: LearnerSpec,
    seed: RngSeed,
    scheme: SamplingScheme = "resample",
) -> ConditionalSampler:
    """
    Fit nu_{-j} by regressing column j on the other columns.

    Args:
        x_train: (n, p) training design, p >= 2
        j: Coordinate to resample
        spec: Learner for nu_{-j}
        seed: RNG seed for the learner
        scheme: Residual selection scheme

    Returns:
        Fitted sampler holding the n in-sample residuals
    """
    x_train = as_matrix(x_train)
    if x_train.shape[1] < 2:
        raise InvalidParameterError("Conditional sampling needs at least 2 features")
    check_feature_index(j, x_train.shape[1])
    nu_model = fit(spec, np.delete(x_train, j, axis=1), x_train[:, j], seed)
    return sampler_from_model(x_train, j, nu_model, scheme)


def _check_test(sampler: ConditionalSampler, x_test: np.ndarray, n_cal: int) -> np.ndarray:
    x_test = as_matrix(x_test)
    if x_test.shape[1] != sampler.p:
        raise InvalidParameterError(
            f"Sampler was fitted for p={sampler.p}, got {x_test.shape[1]} columns"
        )
    if n_cal < 1:
        raise InvalidParameterError(f"n_cal must be positive, got {n_cal}")
    return x_test


def _pool_indices(
    sampler: ConditionalSampler, n_test: int, n_cal: int, rng: np.random.Generator
) -> np.ndarray:
    if sampler.scheme == "resample":
        return rng.integers(0, sampler.pool_size, size=(n_test, n_cal))
    slots = [np.resize(rng.permutation(sampler.pool_size), n_test) for _ in range(n_cal)]
    return np.stack(slots, axis=1)


def draw_column(
    sampler: ConditionalSampler, x_test: np.ndarray, n_cal: int, seed: RngSeed
) -> np.ndarray:
    """
    Conditional draws of coordinate j only.

    Args:
        sampler: Fitted sampler
        x_test: (n_test, p) rows to condition on
        n_cal: Draws per row
        seed: RNG seed

    Returns:
        (n_test, n_cal) matrix of resampled j-th coordinates
    """
    x_test = _check_test(sampler, x_test, n_cal)
    center = sampler.nu_model.predict(np.delete(x_test, sampler.j, axis=1))
    idx = _pool_indices(sampler, x_test.shape[0], n_cal, rng_from(seed))
    return center[:, None] + sampler.residual_pool[idx]


def draw(sampler: ConditionalSampler, x_test: np.ndarray, n_cal: int, seed: RngSeed) -> np.ndarray:
    """
    Conditionally permuted copies of the test rows.

    Args:
        sampler: Fitted sampler
        x_test: (n_test, p) rows
        n_cal: Copies per row
        seed: RNG seed

    Returns:
        (n_test, n_cal, p) tensor equal to x_test except along coordinate j
    """
    x_test = _check_test(sampler, x_test, n_cal)
    column = draw_column(sampler, x_test, n_cal, seed)
    out = np.repeat(x_test[:, None, :], n_cal, axis=1)
    out[:, :, sampler.j] = column
    return out


class GaussianConditionalMean:
    """E[X^j | X^{-j}] for a Gaussian design, as an estimator."""

    def __init__(self, cov: Covariance, mean: np.ndarray, j: int):
        self.weights_, self.sigma_cond_ = conditional_gaussian_weights(cov, j)
        mean = np.broadcast_to(np.asarray(mean, dtype=float), (cov.p,))
        self.intercept_ = float(mean[j] - np.delete(mean, j) @ self.weights_)
        self.coef_ = self.weights_

    def predict(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights_ + self.intercept_


def oracle_gaussian_sampler(
    cov: Covariance,
    j: int,
    seed: RngSeed,
    mean: Optional[np.ndarray] = None,
    pool_size: int = 100_000,
    scheme: SamplingScheme = "resample",
) -> ConditionalSampler:
    """
    Sampler with the exact Gaussian conditional mean and an exact N(0, sigma_cond) pool.

    Args:
        cov: Covariance of X
        j: Coordinate
        seed: RNG seed for the pool
        mean: Mean of X (default zero)
        pool_size: Number of residuals in the pool
        scheme: Residual selection scheme
    """
    mean = np.zeros(cov.p) if mean is None else mean
    estimator = GaussianConditionalMean(cov, mean, j)
    nu_model = FittedModel(spec=None, estimator=estimator, input_dim=cov.p - 1, training_rows=0)
    pool = np.sqrt(estimator.sigma_cond_) * rng_from(seed).standard_normal(pool_size)
    return ConditionalSampler(j=j, nu_model=nu_model, residual_pool=pool, scheme=scheme)
