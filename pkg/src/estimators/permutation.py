"""Permutation-based importance: PFI, CPI and Sobol-CPI.

All three keep the fitted model fixed and only perturb column j of the test
rows. PFI shuffles the column marginally; CPI and Sobol-CPI replace it with
draws from a conditional sampler.
"""

import logging
from typing import Optional

import numpy as np

from src.data.dataset import Dataset, check_feature_index
from src.data.seeding import RngSeed, rng_from
from src.errors import InvalidParameterError
from src.estimators.losses import LossKind, check_binary, check_loss_kind, loss, threshold
from src.estimators.scores import ImportanceScore, make_score
from src.learners.base import FittedModel
from src.sampler.conditional import ConditionalSampler, draw_column


logger = logging.getLogger(__name__)


def _check_model(model: FittedModel, test: Dataset) -> None:
    if model.input_dim != test.p:
        raise InvalidParameterError(
            f"Model expects {model.input_dim} columns but the test set has {test.p}"
        )


def _check_sampler(sampler: ConditionalSampler, test: Dataset) -> None:
    if sampler.p != test.p:
        raise InvalidParameterError(
            f"Sampler for feature {sampler.j} was fitted with p={sampler.p}, test has {test.p}"
        )


def _with_column(x: np.ndarray, j: int, values: np.ndarray) -> np.ndarray:
    out = np.array(x, dtype=float, copy=True)
    out[:, j] = values
    return out


def pfi(
    model: FittedModel,
    test: Dataset,
    j: int,
    loss_kind: LossKind,
    seed: RngSeed,
    permutation: Optional[np.ndarray] = None,
) -> ImportanceScore:
    """
    Permutation feature importance of coordinate j.

    Column j of the test rows is shuffled by one uniform permutation (fixed
    points allowed) and the loss increase of the fixed model is recorded.

    Args:
        model: Model trained on all p features
        test: Held-out data
        j: Feature index
        loss_kind: Loss function
        seed: RNG seed for the permutation
        permutation: Explicit row permutation to use instead of a random one

    Returns:
        Importance score with one difference per test row
    """
    check_loss_kind(loss_kind)
    check_feature_index(j, test.p)
    _check_model(model, test)
    if permutation is None:
        permutation = rng_from(seed).permutation(test.n)
    else:
        permutation = np.asarray(permutation, dtype=int)
        if not np.array_equal(np.sort(permutation), np.arange(test.n)):
            raise InvalidParameterError("permutation must be a permutation of the test rows")
    full = loss(loss_kind, model.predict(test.x), test.y)
    shuffled = _with_column(test.x, j, test.x[permutation, j])
    reduced = loss(loss_kind, model.predict(shuffled), test.y)
    return make_score(j, "pfi", None, full, reduced, seed, test.names[j])


def cpi(
    model: FittedModel,
    sampler: ConditionalSampler,
    test: Dataset,
    loss_kind: LossKind,
    seed: RngSeed,
) -> ImportanceScore:
    """
    Conditional permutation importance of ``sampler.j``.

    Uses one conditional draw per test row. The draw is the first slot of
    ``draw_column(sampler, test.x, 1, seed)``, the same draw Sobol-CPI(1)
    uses under the same seed.
    """
    check_loss_kind(loss_kind)
    _check_model(model, test)
    _check_sampler(sampler, test)
    j = sampler.j
    column = draw_column(sampler, test.x, 1, seed)[:, 0]
    full = loss(loss_kind, model.predict(test.x), test.y)
    reduced = loss(loss_kind, model.predict(_with_column(test.x, j, column)), test.y)
    return make_score(j, "cpi", 1, full, reduced, seed, test.names[j])


def sobol_cpi(
    model: FittedModel,
    sampler: ConditionalSampler,
    test: Dataset,
    n_cal: int,
    loss_kind: LossKind,
    seed: RngSeed,
    corrected: bool = True,
) -> ImportanceScore:
    """
    Sobol-CPI with ``n_cal`` conditional draws per test row.

    The reduced prediction of row i is the average of the model over its
    n_cal conditional copies. Under the quadratic loss the per-sample
    difference is rescaled by n_cal / (n_cal + 1), which removes the
    1/n_cal variance the finite average adds to the reduced loss. Under
    the zero_one loss the reduced prediction is the indicator of that
    average being at least 0.5 and no rescaling is applied.

    Args:
        model: Model trained on all p features
        sampler: Conditional sampler for the feature
        test: Held-out data
        n_cal: Draws per row (>= 1)
        loss_kind: Loss function
        seed: RNG seed for the draws
        corrected: Apply the n_cal / (n_cal + 1) factor (quadratic loss)

    Returns:
        Importance score with one difference per test row
    """
    check_loss_kind(loss_kind)
    _check_model(model, test)
    _check_sampler(sampler, test)
    if n_cal < 1:
        raise InvalidParameterError(f"n_cal must be positive, got {n_cal}")
    if loss_kind == "zero_one":
        check_binary(test.y)
    j = sampler.j
    columns = draw_column(sampler, test.x, n_cal, seed)
    total = np.zeros(test.n)
    for k in range(n_cal):
        total += model.predict(_with_column(test.x, j, columns[:, k]))
    averaged = total / n_cal
    full = loss(loss_kind, model.predict(test.x), test.y)
    if loss_kind == "zero_one":
        reduced = loss(loss_kind, threshold(averaged), test.y)
        return make_score(j, "sobol_cpi", n_cal, full, reduced, seed, test.names[j])
    reduced = loss(loss_kind, averaged, test.y)
    scale = n_cal / (n_cal + 1.0) if corrected else 1.0
    return make_score(j, "sobol_cpi", n_cal, full, reduced, seed, test.names[j], scale=scale)
