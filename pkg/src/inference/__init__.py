"""Variance estimation and conditional-null tests."""

from src.inference.testing import (
    CorrectionSpec,
    TestResult,
    VarianceSpec,
    correction_term,
    resolve_c,
    run_feature_tests,
    test_importance,
)
from src.inference.variance import (
    influence_function,
    variance_bootstrap,
    variance_influence,
    variance_sample,
)

__all__ = [
    "CorrectionSpec",
    "TestResult",
    "VarianceSpec",
    "correction_term",
    "influence_function",
    "resolve_c",
    "run_feature_tests",
    "test_importance",
    "variance_bootstrap",
    "variance_influence",
    "variance_sample",
]
