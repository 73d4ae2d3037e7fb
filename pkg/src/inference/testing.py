"""One-sided tests of the conditional null with additive threshold corrections.

The null is rejected when

    estimate >= z_alpha * se + c * n^(-gamma)

with gamma = 1/2 (sqrt), 1 (linear) or 2 (quadratic), and no additive term
for ``none``. The additive term keeps the test valid when the variance of
the estimate vanishes under the null.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from src.data.seeding import RngSeed, derive_seed
from src.errors import InvalidParameterError
from src.estimators.scores import ImportanceScore
from src.inference.variance import MIN_BOOTSTRAP_REPS, variance_bootstrap, variance_sample


logger = logging.getLogger(__name__)

VARIANCE_METHODS = ("sample", "bootstrap")

# Decay exponent gamma of the additive term c * n^(-gamma).
CORRECTION_RATES: Dict[str, Optional[float]] = {
    "none": None,
    "sqrt": 0.5,
    "linear": 1.0,
    "quadratic": 2.0,
}

AUTO = "auto"


@dataclass(frozen=True)
class VarianceSpec:
    """How the standard error of an estimate is obtained."""

    method: str = "sample"
    bootstrap_reps: int = 200

    def __post_init__(self) -> None:
        if self.method not in VARIANCE_METHODS:
            raise InvalidParameterError(
                f"Unknown variance method '{self.method}'; expected sample or bootstrap"
            )
        if self.method == "bootstrap" and self.bootstrap_reps < MIN_BOOTSTRAP_REPS:
            raise InvalidParameterError(
                f"bootstrap_reps must be >= {MIN_BOOTSTRAP_REPS}, got {self.bootstrap_reps}"
            )


@dataclass(frozen=True)
class CorrectionSpec:
    """Additive threshold term c * n^(-gamma); ``c="auto"`` means sd(y_test)."""

    kind: str = "sqrt"
    c: Union[float, str] = AUTO

    def __post_init__(self) -> None:
        if self.kind not in CORRECTION_RATES:
            raise InvalidParameterError(
                f"Unknown correction '{self.kind}'; expected one of {', '.join(CORRECTION_RATES)}"
            )
        if self.c != AUTO:
            if isinstance(self.c, str) or not np.isfinite(self.c) or self.c < 0:
                raise InvalidParameterError(f"c must be 'auto' or a nonnegative number, got {self.c}")

    @property
    def rate(self) -> Optional[float]:
        return CORRECTION_RATES[self.kind]


def resolve_c(corr: CorrectionSpec, y_test: Optional[np.ndarray] = None) -> float:
    """Numeric c; ``auto`` resolves to the sample standard deviation of y_test."""
    if corr.c != AUTO:
        return float(corr.c)
    if y_test is None:
        raise InvalidParameterError("c='auto' needs the test responses")
    y_test = np.asarray(y_test, dtype=float).reshape(-1)
    if y_test.size < 2:
        raise InvalidParameterError("c='auto' needs at least 2 test responses")
    return float(np.std(y_test, ddof=1))


def correction_term(corr: CorrectionSpec, c: float, n: float) -> float:
    """c * n^(-gamma), or 0 for ``none``."""
    if n <= 0:
        raise InvalidParameterError(f"Effective sample size must be positive, got {n}")
    if corr.rate is None:
        return 0.0
    return float(c * n ** (-corr.rate))


@dataclass(frozen=True)
class TestResult:
    """Outcome of one feature test."""

    __test__ = False

    j: int
    estimator: str
    statistic: float
    se: float
    threshold: float
    p_value: float
    reject: bool
    alpha: float
    correction: CorrectionSpec
    c: float
    additive: float
    warning: bool = False
    feature_name: Optional[str] = None

    def to_row(self) -> Dict[str, Any]:
        """Flat record for the test-result CSV."""
        return {
            "feature": self.j,
            "feature_name": self.feature_name if self.feature_name is not None else f"x{self.j}",
            "estimator": self.estimator,
            "estimate": self.statistic,
            "se": self.se,
            "threshold": self.threshold,
            "p_value": self.p_value,
            "reject": self.reject,
            "correction": self.correction.kind,
            "c": self.c,
            "alpha": self.alpha,
            "warning": self.warning,
        }


def estimate_variance(score: ImportanceScore, var_spec: VarianceSpec, seed: RngSeed) -> float:
    if var_spec.method == "bootstrap":
        return variance_bootstrap(score, var_spec.bootstrap_reps, seed)
    return variance_sample(score)


def test_importance(
    score: ImportanceScore,
    var_spec: VarianceSpec,
    corr: CorrectionSpec,
    alpha: float,
    n: Optional[float] = None,
    seed: RngSeed = 0,
    y_test: Optional[np.ndarray] = None,
) -> TestResult:
    """
    One-sided level-alpha test that feature ``score.j`` is conditionally null.

    When the standard error is zero the decision is a direct comparison of
    the estimate with the additive term: reject (p-value 0) if it is
    strictly larger, retain (p-value 1) otherwise.

    Args:
        score: Importance score with per-sample differences
        var_spec: Variance method
        corr: Additive correction
        alpha: Level in (0, 1)
        n: Effective sample size of the additive term (default: n_test)
        seed: RNG seed for the bootstrap
        y_test: Test responses, required when ``corr.c`` is ``auto``

    Returns:
        Test result
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    c = resolve_c(corr, y_test)
    additive = correction_term(corr, c, score.n_test if n is None else n)
    variance = estimate_variance(score, var_spec, seed)
    warning = False
    if variance < 0:
        logger.warning(f"Negative variance {variance:.3g} for feature {score.j} clipped to 0")
        variance = 0.0
        warning = True
    se = float(np.sqrt(variance))
    statistic = score.estimate
    if se == 0.0:
        reject = statistic > additive
        p_value = 0.0 if reject else 1.0
        threshold = additive
    else:
        threshold = float(stats.norm.ppf(1.0 - alpha)) * se + additive
        reject = statistic >= threshold
        p_value = float(stats.norm.sf((statistic - additive) / se))
    return TestResult(
        j=score.j,
        estimator=score.label,
        statistic=statistic,
        se=se,
        threshold=threshold,
        p_value=p_value,
        reject=bool(reject),
        alpha=alpha,
        correction=corr,
        c=c,
        additive=additive,
        warning=warning,
        feature_name=score.feature_name,
    )


test_importance.__test__ = False  # type: ignore[attr-defined]


def run_feature_tests(
    scores: Sequence[ImportanceScore],
    var_spec: VarianceSpec,
    corr: CorrectionSpec,
    alpha: float,
    n: Optional[float] = None,
    seed: RngSeed = 0,
    y_test: Optional[np.ndarray] = None,
) -> List[TestResult]:
    """Test every score, ordered by feature index (stable for ties)."""
    ordered = sorted(scores, key=lambda s: s.j)
    return [
        test_importance(s, var_spec, corr, alpha, n, derive_seed(seed, s.j), y_test)
        for s in ordered
    ]
