"""Synthetic benchmarks, importance oracles and metrics."""

from src.benchmarks.generators import (
    GENERATORS,
    GroundTruth,
    gen_linear,
    gen_nonlinear,
    gen_polynomial,
)
from src.benchmarks.metrics import log_log_slope, mean_bias, metric_auc, rejection_rate
from src.benchmarks.oracles import linear_tsi, tsi_oracle_montecarlo

__all__ = [
    "GENERATORS",
    "GroundTruth",
    "gen_linear",
    "gen_nonlinear",
    "gen_polynomial",
    "linear_tsi",
    "log_log_slope",
    "mean_bias",
    "metric_auc",
    "rejection_rate",
    "tsi_oracle_montecarlo",
]
