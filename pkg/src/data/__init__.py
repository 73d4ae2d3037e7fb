"""Data containers, seeding and Gaussian designs."""

from src.data.dataset import Dataset, SplitSpec, split, split_indices
from src.data.gaussian import (
    Covariance,
    conditional_gaussian_params,
    conditional_gaussian_variance,
    sample_gaussian,
    toeplitz_covariance,
)
from src.data.seeding import RngSeed, derive_seed, rng_from

__all__ = [
    "Dataset",
    "SplitSpec",
    "split",
    "split_indices",
    "Covariance",
    "conditional_gaussian_params",
    "conditional_gaussian_variance",
    "sample_gaussian",
    "toeplitz_covariance",
    "RngSeed",
    "derive_seed",
    "rng_from",
]
