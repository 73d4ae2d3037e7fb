"""Refitting-based importance: LOCO and the data-splitting LOCO-W."""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from src.data.dataset import Dataset, check_feature_index
from src.data.seeding import RngSeed, derive_seed, rng_from
from src.errors import InvalidParameterError
from src.estimators.losses import LossKind, check_loss_kind, loss
from src.estimators.scores import ImportanceScore, make_score
from src.learners.base import FittedModel, LearnerSpec
from src.learners.fitting import fit


logger = logging.getLogger(__name__)

Halves = Tuple[np.ndarray, np.ndarray]


def loco(
    full_model: FittedModel,
    restricted_spec: LearnerSpec,
    train: Dataset,
    test: Dataset,
    j: int,
    loss_kind: LossKind,
    seed: RngSeed,
) -> ImportanceScore:
    """
    Leave-one-covariate-out importance.

    Refits ``restricted_spec`` on the training rows without column j and
    compares its test loss with the loss of ``full_model``.

    Args:
        full_model: Model trained on all p features
        restricted_spec: Learner for the model without feature j
        train: Training data
        test: Held-out data
        j: Feature index
        loss_kind: Loss function
        seed: RNG seed for the restricted fit

    Returns:
        Importance score with one difference per test row
    """
    check_loss_kind(loss_kind)
    check_feature_index(j, test.p)
    if full_model.input_dim != test.p or train.p != test.p:
        raise InvalidParameterError("Train, test and full model must share the same p")
    restricted = fit(restricted_spec, train.drop_column(j), train.y, seed)
    full = loss(loss_kind, full_model.predict(test.x), test.y)
    reduced = loss(loss_kind, restricted.predict(test.drop_column(j)), test.y)
    return make_score(j, "loco", None, full, reduced, seed, test.names[j])


def half_split(n: int, seed: RngSeed) -> Halves:
    """Two disjoint random halves of ``range(n)`` of equal size (one row dropped if n is odd)."""
    if n < 2:
        raise InvalidParameterError(f"Cannot split {n} rows into two halves")
    order = rng_from(seed).permutation(n)
    half = n // 2
    return np.sort(order[:half]), np.sort(order[half : 2 * half])


def _check_halves(halves: Sequence[np.ndarray], n: int, what: str) -> Halves:
    first, second = (np.asarray(h, dtype=int) for h in halves)
    if first.size == 0 or second.size == 0:
        raise InvalidParameterError(f"{what} halves must be nonempty")
    if first.min() < 0 or second.min() < 0 or max(first.max(), second.max()) >= n:
        raise InvalidParameterError(f"{what} halves index outside {n} rows")
    return first, second


def loco_w(
    full_spec: LearnerSpec,
    train: Dataset,
    test: Dataset,
    j: int,
    loss_kind: LossKind,
    seed: RngSeed,
    train_halves: Optional[Halves] = None,
    test_halves: Optional[Halves] = None,
) -> ImportanceScore:
    """
    LOCO with sample splitting.

    The full and restricted models are trained on disjoint halves of the
    training rows and each is evaluated on its own half of the test rows.
    The per-sample differences pair reduced-model losses on the second
    test half with full-model losses on the first, so their mean is the
    difference of the two half-sample mean losses.

    Args:
        full_spec: Learner for both models
        train: Training data
        test: Held-out data (at least 2 rows)
        j: Feature index
        loss_kind: Loss function
        seed: RNG seed for the splits and fits
        train_halves: Explicit (full, restricted) training row indices
        test_halves: Explicit (full, restricted) test row indices of equal size

    Returns:
        Importance score with one difference per test pair
    """
    check_loss_kind(loss_kind)
    check_feature_index(j, test.p)
    if train.p != test.p:
        raise InvalidParameterError("Train and test must share the same p")
    if train_halves is None:
        train_halves = half_split(train.n, derive_seed(seed, 0))
    if test_halves is None:
        test_halves = half_split(test.n, derive_seed(seed, 1))
    train_full, train_reduced = _check_halves(train_halves, train.n, "Train")
    test_full, test_reduced = _check_halves(test_halves, test.n, "Test")
    if test_full.size != test_reduced.size:
        raise InvalidParameterError("Test halves must have equal size")

    full_model = fit(full_spec, train.x[train_full], train.y[train_full], derive_seed(seed, 2))
    reduced_model = fit(
        full_spec,
        np.delete(train.x[train_reduced], j, axis=1),
        train.y[train_reduced],
        derive_seed(seed, 3),
    )
    full = loss(loss_kind, full_model.predict(test.x[test_full]), test.y[test_full])
    reduced = loss(
        loss_kind,
        reduced_model.predict(np.delete(test.x[test_reduced], j, axis=1)),
        test.y[test_reduced],
    )
    logger.debug(f"loco_w feature {j}: {train_full.size}/{train_reduced.size} train rows")
    return make_score(j, "loco_w", None, full, reduced, seed, test.names[j])
