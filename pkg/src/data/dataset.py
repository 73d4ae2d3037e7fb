"""Tabular data container, train/test splitting and CSV I/O."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.data.seeding import RngSeed, check_seed, rng_from
from src.errors import InvalidParameterError


logger = logging.getLogger(__name__)


def _frozen(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Design matrix with its response.

    Arrays are copied and made read-only at construction.
    """

    x: np.ndarray
    y: np.ndarray
    feature_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.ndim != 2:
            raise InvalidParameterError(f"x must be a matrix, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise InvalidParameterError(
                f"x has {x.shape[0]} rows but y has length {y.shape[0]}"
            )
        if x.shape[1] < 2:
            raise InvalidParameterError("Conditional importance needs at least 2 features")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidParameterError("Dataset contains NaN or infinite values")
        names = self.feature_names
        if names is not None:
            names = tuple(str(name) for name in names)
            if len(names) != x.shape[1]:
                raise InvalidParameterError(
                    f"Got {len(names)} feature names for {x.shape[1]} columns"
                )
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def names(self) -> List[str]:
        """Feature names, defaulting to ``x0 .. x{p-1}``."""
        if self.feature_names is not None:
            return list(self.feature_names)
        return [f"x{j}" for j in range(self.p)]

    def column(self, j: int) -> np.ndarray:
        check_feature_index(j, self.p)
        return self.x[:, j]

    def take(self, rows: np.ndarray) -> "Dataset":
        """Dataset restricted to the given row indices."""
        return Dataset(self.x[rows], self.y[rows], self.feature_names)

    def drop_column(self, j: int) -> np.ndarray:
        """Design matrix without column j (the x^{-j} block)."""
        check_feature_index(j, self.p)
        return np.delete(self.x, j, axis=1)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split parameters."""

    train_fraction: float = 0.5
    seed: RngSeed = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidParameterError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )
        check_seed(self.seed)


def check_feature_index(j: int, p: int) -> None:
    """Raise unless 0 <= j < p."""
    if not 0 <= j < p:
        raise InvalidParameterError(f"Feature index {j} out of range for p={p}")


def split_indices(n: int, spec: SplitSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Uniform random partition of ``range(n)`` into train and test indices.

    Args:
        n: Number of rows
        spec: Split parameters

    Returns:
        Sorted (train_idx, test_idx)
    """
    n_train = int(round(spec.train_fraction * n))
    if n < 2 or n_train < 1 or n - n_train < 1:
        raise InvalidParameterError(
            f"train_fraction={spec.train_fraction} leaves an empty part for n={n}"
        )
    order = rng_from(spec.seed).permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def split(ds: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    """Split a dataset into (train, test)."""
    train_idx, test_idx = split_indices(ds.n, spec)
    logger.debug(f"Split {ds.n} rows into {train_idx.size} train / {test_idx.size} test")
    return ds.take(train_idx), ds.take(test_idx)


def _write_comments(handle, header_lines: Sequence[str]) -> None:
    for line in header_lines:
        for part in str(line).splitlines():
            handle.write(f"# {part}\n")


def write_dataset_csv(ds: Dataset, path: Path, header_lines: Sequence[str] = ()) -> None:
    """
    Write a dataset as CSV: feature columns then a final ``y`` column.

    Args:
        ds: Dataset to write
        path: Destination file
        header_lines: Comment lines written first, prefixed with ``# ``
    """
    frame = pd.DataFrame(ds.x, columns=ds.names)
    frame["y"] = ds.y
    with open(path, "w", encoding="utf-8", newline="") as f:
        _write_comments(f, header_lines)
        frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")


def read_dataset_csv(path: Path) -> Dataset:
    """Read a dataset written by :func:`write_dataset_csv` (``#`` lines skipped)."""
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    if "y" not in frame.columns:
        raise InvalidParameterError(f"{path} has no 'y' column")
    features = [c for c in frame.columns if c != "y"]
    return Dataset(
        frame[features].to_numpy(dtype=float),
        frame["y"].to_numpy(dtype=float),
        tuple(features),
    )


def write_covariance_csv(sigma: np.ndarray, path: Path) -> None:
    """Write a covariance matrix as a headered CSV (debugging aid)."""
    p = sigma.shape[0]
    labels = [f"x{j}" for j in range(p)]
    pd.DataFrame(sigma, index=labels, columns=labels).to_csv(
        path, float_format="%.17g", lineterminator="\n"
    )
