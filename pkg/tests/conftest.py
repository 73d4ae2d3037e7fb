"""Shared fixtures for the condimp test suite."""

from typing import Sequence, Tuple

import numpy as np
import pytest

from src.data.dataset import Dataset
from src.data.gaussian import Covariance, sample_gaussian, toeplitz_covariance
from src.data.seeding import derive_seed, rng_from


def make_linear(
    n: int,
    beta: Sequence[float],
    rho: float = 0.6,
    sigma: float = 1.0,
    seed: int = 0,
) -> Tuple[Dataset, Covariance]:
    """y = X beta + N(0, sigma^2) on a Toeplitz design."""
    beta = np.asarray(beta, dtype=float)
    cov = toeplitz_covariance(beta.size, rho)
    x = sample_gaussian(n, np.zeros(beta.size), cov, derive_seed(seed, 0))
    y = x @ beta + sigma * rng_from(derive_seed(seed, 1)).standard_normal(n)
    return Dataset(x, y), cov


def train_test(n: int, beta: Sequence[float], rho: float = 0.6, sigma: float = 1.0, seed: int = 0):
    """Independent train and test sets of n rows each, plus the covariance."""
    train, cov = make_linear(n, beta, rho, sigma, derive_seed(seed, 10))
    test, _ = make_linear(n, beta, rho, sigma, derive_seed(seed, 11))
    return train, test, cov


@pytest.fixture
def linear_split():
    """Train/test with beta = (2, 0, 1, 0, 0), rho = 0.6, 2000 rows each."""
    return train_test(2000, [2.0, 0.0, 1.0, 0.0, 0.0], seed=123)


@pytest.fixture
def config_file(tmp_path):
    """Write a YAML experiment config and return its path."""

    def write(text: str):
        path = tmp_path / "experiment.yaml"
        path.write_text(text, encoding="utf-8")
        return path

    return write
