"""Business logic services."""

from src.services.benchmark_service import BenchmarkReport, BenchmarkService, run_experiment
from src.services.importance_service import (
    ImportanceService,
    estimate_all_features,
    estimate_feature,
)

__all__ = [
    "BenchmarkReport",
    "BenchmarkService",
    "ImportanceService",
    "estimate_all_features",
    "estimate_feature",
    "run_experiment",
]
