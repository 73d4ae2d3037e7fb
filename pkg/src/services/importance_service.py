"""Service running importance estimators over many features."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from src.data.dataset import Dataset, check_feature_index
from src.data.seeding import (
    STAGE_ESTIMATE,
    STAGE_MODEL,
    STAGE_REDUCED,
    STAGE_SAMPLER,
    RngSeed,
    derive_seed,
)
from src.errors import InvalidParameterError, UsageError
from src.estimators.losses import LossKind, check_loss_kind
from src.estimators.permutation import cpi, pfi, sobol_cpi
from src.estimators.removal import loco, loco_w
from src.estimators.scores import ESTIMATORS, ImportanceScore
from src.learners.base import FittedModel, LearnerSpec
from src.learners.fitting import fit
from src.sampler.conditional import ConditionalSampler, SamplingScheme, fit_sampler


logger = logging.getLogger(__name__)

CONDITIONAL_ESTIMATORS = ("cpi", "sobol_cpi")


def estimate_feature(
    estimator: str,
    j: int,
    train: Dataset,
    test: Dataset,
    seed: RngSeed,
    loss_kind: LossKind = "quadratic",
    n_cal: Optional[int] = None,
    model: Optional[FittedModel] = None,
    sampler: Optional[ConditionalSampler] = None,
    restricted_spec: Optional[LearnerSpec] = None,
    full_spec: Optional[LearnerSpec] = None,
) -> ImportanceScore:
    """
    Run one estimator on one feature.

    The estimator seed is derived from ``seed`` and ``j`` only, so cpi and
    sobol_cpi with n_cal=1 see the same conditional draws.

    Raises:
        UsageError: A component the estimator needs was not supplied
    """
    feature_seed = derive_seed(seed, STAGE_ESTIMATE, j)
    if estimator in ("pfi", "cpi", "sobol_cpi", "loco") and model is None:
        raise UsageError(f"{estimator} needs a fitted full model")
    if estimator in CONDITIONAL_ESTIMATORS and sampler is None:
        raise UsageError(f"{estimator} needs a conditional sampler for feature {j}")
    if estimator == "pfi":
        return pfi(model, test, j, loss_kind, feature_seed)
    if estimator == "cpi":
        return cpi(model, sampler, test, loss_kind, feature_seed)
    if estimator == "sobol_cpi":
        return sobol_cpi(model, sampler, test, n_cal or 1, loss_kind, feature_seed)
    if estimator == "loco":
        if restricted_spec is None:
            raise UsageError("loco needs a restricted learner")
        return loco(model, restricted_spec, train, test, j, loss_kind, derive_seed(seed, STAGE_REDUCED, j))
    if estimator == "loco_w":
        if full_spec is None:
            raise UsageError("loco_w needs a learner specification (hand-built models cannot be refit)")
        return loco_w(full_spec, train, test, j, loss_kind, derive_seed(seed, STAGE_REDUCED, j))
    raise InvalidParameterError(f"Unknown estimator '{estimator}'")


def estimate_all_features(
    estimator: str,
    train: Dataset,
    test: Dataset,
    seed: RngSeed,
    features: Optional[Sequence[int]] = None,
    loss_kind: LossKind = "quadratic",
    n_cal: Optional[int] = None,
    model: Optional[FittedModel] = None,
    samplers: Optional[Dict[int, ConditionalSampler]] = None,
    restricted_spec: Optional[LearnerSpec] = None,
    full_spec: Optional[LearnerSpec] = None,
    workers: int = 1,
) -> List[ImportanceScore]:
    """
    Run one estimator on every requested feature.

    Features run on a thread pool sharing the immutable full model; the
    result is ordered by feature index whatever the worker count.

    Returns:
        One score per feature
    """
    features = sorted(range(test.p) if features is None else set(features))
    samplers = samplers or {}

    def task(j: int) -> ImportanceScore:
        return estimate_feature(
            estimator,
            j,
            train,
            test,
            seed,
            loss_kind,
            n_cal,
            model,
            samplers.get(j),
            restricted_spec,
            full_spec,
        )

    if workers <= 1 or len(features) <= 1:
        scores = [task(j) for j in features]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(task, features))
    logger.info(f"{estimator}: estimated {len(scores)} features on {test.n} test rows")
    return scores


class ImportanceService:
    """
    Fits the models an experiment needs and runs estimators with them.

    One full model serves every feature; conditional samplers are fitted per
    feature on the training rows.
    """

    def __init__(
        self,
        model_spec: LearnerSpec,
        sampler_spec: LearnerSpec,
        restricted_spec: Optional[LearnerSpec] = None,
        loss_kind: LossKind = "quadratic",
        sampling_scheme: SamplingScheme = "resample",
        workers: int = 1,
    ):
        """
        Initialize importance service.

        Args:
            model_spec: Learner for the full model
            sampler_spec: Learner for nu_{-j}
            restricted_spec: Learner for LOCO's reduced model (default: model_spec)
            loss_kind: Loss function
            sampling_scheme: Residual selection scheme of the samplers
            workers: Threads used across features
        """
        self.model_spec = model_spec
        self.sampler_spec = sampler_spec
        self.restricted_spec = restricted_spec or model_spec
        self.loss_kind = check_loss_kind(loss_kind)
        self.sampling_scheme = sampling_scheme
        self.workers = max(1, workers)

    def fit_model(self, train: Dataset, seed: RngSeed) -> FittedModel:
        """Fit the full model on the training rows."""
        model = fit(self.model_spec, train.x, train.y, derive_seed(seed, STAGE_MODEL))
        logger.info(f"Fitted full {model.name} model on {train.n} rows")
        return model

    def fit_samplers(
        self, train: Dataset, features: Sequence[int], seed: RngSeed
    ) -> Dict[int, ConditionalSampler]:
        """Fit one conditional sampler per feature."""
        for j in features:
            check_feature_index(j, train.p)

        def task(j: int) -> ConditionalSampler:
            return fit_sampler(
                train.x,
                j,
                self.sampler_spec,
                derive_seed(seed, STAGE_SAMPLER, j),
                self.sampling_scheme,
            )

        features = sorted(set(features))
        if self.workers <= 1:
            samplers = [task(j) for j in features]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                samplers = list(pool.map(task, features))
        return dict(zip(features, samplers))

    def prepare(
        self,
        estimators: Sequence[Dict],
        train: Dataset,
        seed: RngSeed,
        features: Optional[Sequence[int]] = None,
    ) -> Tuple[Optional[FittedModel], Dict[int, ConditionalSampler]]:
        """
        Validate estimator entries and fit what they share.

        The full model is fitted once when any entry needs it; samplers are
        fitted once for the union of features the conditional entries score.

        Returns:
            The full model (None when only loco_w is requested) and samplers by feature
        """
        for entry in estimators:
            if entry["name"] not in ESTIMATORS:
                raise UsageError(f"Unknown estimator '{entry['name']}'")
            n_cal = entry.get("n_cal")
            if n_cal is not None and entry["name"] != "sobol_cpi" and not (
                entry["name"] == "cpi" and n_cal == 1
            ):
                raise UsageError(f"n_cal={n_cal} does not apply to {entry['name']}")
        needs_model = any(e["name"] != "loco_w" for e in estimators)
        model = self.fit_model(train, seed) if needs_model else None

        conditional = [e for e in estimators if e["name"] in CONDITIONAL_ESTIMATORS]
        wanted = set()
        for entry in conditional:
            subset = entry.get("features") or features
            wanted.update(range(train.p) if subset is None else subset)
        samplers = self.fit_samplers(train, sorted(wanted), seed) if wanted else {}
        return model, samplers

    def estimate(
        self,
        entry: Dict,
        train: Dataset,
        test: Dataset,
        seed: RngSeed,
        model: Optional[FittedModel],
        samplers: Dict[int, ConditionalSampler],
        features: Optional[Sequence[int]] = None,
    ) -> List[ImportanceScore]:
        """Scores of one estimator entry from an already fitted model and samplers."""
        return estimate_all_features(
            entry["name"],
            train,
            test,
            seed,
            features=entry.get("features") or features,
            loss_kind=self.loss_kind,
            n_cal=entry.get("n_cal"),
            model=model,
            samplers=samplers,
            restricted_spec=self.restricted_spec,
            full_spec=self.model_spec,
            workers=self.workers,
        )

    def run(
        self,
        estimators: Sequence[Dict],
        train: Dataset,
        test: Dataset,
        seed: RngSeed,
        features: Optional[Sequence[int]] = None,
    ) -> List[ImportanceScore]:
        """
        Run several estimators sharing one full model and one set of samplers.

        Args:
            estimators: Mappings with ``name``, optional ``n_cal`` and ``features``
            train: Training data
            test: Held-out data
            seed: Base seed
            features: Default feature subset (all features when None)

        Returns:
            Scores grouped by estimator in the given order, features ascending
        """
        model, samplers = self.prepare(estimators, train, seed, features)
        scores: List[ImportanceScore] = []
        for entry in estimators:
            scores.extend(self.estimate(entry, train, test, seed, model, samplers, features))
        return scores
