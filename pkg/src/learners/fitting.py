"""Fit, predict and cross-validated selection over the built-in learners."""

import logging
from typing import Callable, Dict, Sequence

import numpy as np

from src.data.seeding import RngSeed, derive_seed, rng_from
from src.errors import InvalidParameterError
from src.learners.base import Estimator, FittedModel, LearnerSpec, check_xy, kfold_indices
from src.learners.linear import LassoRegression, LinearRegression, RidgeRegression
from src.learners.neighbors import KNeighborsRegression
from src.learners.trees import GradientBoosting, RegressionTree


logger = logging.getLogger(__name__)

_FACTORIES: Dict[str, Callable[..., Estimator]] = {
    "ols": LinearRegression,
    "ridge": RidgeRegression,
    "lasso": LassoRegression,
    "cart": RegressionTree,
    "gradient_boosting": GradientBoosting,
    "knn": KNeighborsRegression,
}


def make_estimator(spec: LearnerSpec) -> Estimator:
    """Unfitted estimator for a (non cv_select) spec."""
    return _FACTORIES[spec.kind](**spec.params)


def fit(spec: LearnerSpec, x: np.ndarray, y: np.ndarray, seed: RngSeed) -> FittedModel:
    """
    Train a learner.

    Args:
        spec: Learner specification
        x: (n, d) design
        y: Response of length n
        seed: RNG seed (fold assignment, subsampling)

    Returns:
        Fitted model

    Raises:
        InvalidParameterError: Bad shapes or hyperparameters
        NumericalError: Rank-deficient design under ols
    """
    x, y = check_xy(x, y)
    if spec.kind == "cv_select":
        return cv_select(spec.candidates, x, y, spec.get("folds"), seed)
    estimator = make_estimator(spec).fit(x, y, rng_from(seed))
    logger.debug(f"Fitted {spec.kind} on {x.shape[0]} rows x {x.shape[1]} columns")
    return FittedModel(spec=spec, estimator=estimator, input_dim=x.shape[1], training_rows=x.shape[0])


def predict(model: FittedModel, x: np.ndarray) -> np.ndarray:
    """Predictions of a fitted model, one per row."""
    return model.predict(x)


def cv_select(
    candidates: Sequence[LearnerSpec],
    x: np.ndarray,
    y: np.ndarray,
    folds: int,
    seed: RngSeed,
) -> FittedModel:
    """
    Pick the candidate with the lowest k-fold quadratic loss and refit it.

    Every candidate sees the same folds. Ties go to the earlier candidate.

    Args:
        candidates: Learner specifications to compare
        x: Design
        y: Response
        folds: Number of folds (2 <= folds <= n)
        seed: RNG seed

    Returns:
        Winning learner refitted on all rows
    """
    if not candidates:
        raise InvalidParameterError("cv_select needs a nonempty candidate list")
    x, y = check_xy(x, y)
    if len(candidates) == 1:
        return fit(candidates[0], x, y, derive_seed(seed, 1))

    parts = kfold_indices(x.shape[0], folds, rng_from(derive_seed(seed, 0)))
    losses = np.zeros(len(candidates))
    for c, spec in enumerate(candidates):
        for k, valid in enumerate(parts):
            train = np.setdiff1d(np.arange(x.shape[0]), valid, assume_unique=True)
            model = fit(spec, x[train], y[train], derive_seed(seed, 2, c, k))
            losses[c] += float(np.sum((model.predict(x[valid]) - y[valid]) ** 2))
    losses /= x.shape[0]
    best = int(np.argmin(losses))
    summary = ", ".join(f"{s.kind}={l:.4g}" for s, l in zip(candidates, losses))
    logger.info(f"cv_select chose {candidates[best].kind} ({summary})")
    return fit(candidates[best], x, y, derive_seed(seed, 1))


class FunctionEstimator:
    """Wraps a vectorized function of the design matrix as an estimator."""

    def __init__(self, function: Callable[[np.ndarray], np.ndarray]):
        self.function = function

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.function(x), dtype=float)


def fixed_linear_model(coef: Sequence[float], intercept: float = 0.0) -> FittedModel:
    """Linear predictor with given coefficients (oracle or deliberately wrong)."""
    estimator = LinearRegression(coef=coef, intercept=intercept)
    return FittedModel(spec=None, estimator=estimator, input_dim=len(coef), training_rows=0)


def constant_model(value: float, input_dim: int) -> FittedModel:
    """Predicts ``value`` everywhere."""
    return function_model(lambda x: np.full(x.shape[0], float(value)), input_dim)


def function_model(function: Callable[[np.ndarray], np.ndarray], input_dim: int) -> FittedModel:
    """Model backed by an explicit regression function."""
    return FittedModel(
        spec=None, estimator=FunctionEstimator(function), input_dim=input_dim, training_rows=0
    )

