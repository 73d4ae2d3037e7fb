"""Tabular and JSON output for scores, tests and benchmark reports."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np
import pandas as pd
import yaml

from src.estimators.scores import ImportanceScore
from src.inference.testing import TestResult


class ReportFormatter:
    """Format condimp results as CSV, JSON and one-line digests."""

    # Column orders of the output files
    IMPORTANCE_COLUMNS = [
        "feature",
        "feature_name",
        "estimator",
        "n_cal",
        "estimate",
        "n_test",
        "seed",
    ]

    TEST_COLUMNS = [
        "feature",
        "feature_name",
        "estimator",
        "estimate",
        "se",
        "threshold",
        "p_value",
        "reject",
        "correction",
        "c",
        "alpha",
        "warning",
    ]

    BENCHMARK_COLUMNS = [
        "repetition",
        "n",
        "rho",
        "estimator",
        "n_cal",
        "feature",
        "estimate",
        "tsi",
        "active",
        "se",
        "p_value",
        "reject",
        "correction",
        "wall_time_seconds",
    ]

    # Metrics shown in the benchmark digest
    DIGEST_METRICS = ["auc", "power", "type1"]

    @classmethod
    def header_lines(cls, config: Mapping[str, Any], master_seed: int) -> List[str]:
        """Resolved config and seed as YAML lines for a ``# `` file header."""
        text = yaml.safe_dump(
            {"master_seed": int(master_seed), "config": _plain(config)}, sort_keys=False
        )
        return text.rstrip("\n").splitlines()

    @classmethod
    def write_csv(
        cls, frame: pd.DataFrame, path: Path, header_lines: Sequence[str] = ()
    ) -> None:
        """Write a frame as CSV preceded by ``# ``-prefixed header lines."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")

    @classmethod
    def read_csv(cls, path: Path) -> pd.DataFrame:
        return pd.read_csv(path, comment="#")

    @classmethod
    def write_json(cls, payload: Mapping[str, Any], path: Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_plain(payload), f, indent=2, sort_keys=False)
            f.write("\n")

    @classmethod
    def read_json(cls, path: Path) -> Dict[str, Any]:
        with open(path, encoding="utf-8") as f:
            return json.load(f)

    @classmethod
    def importance_frame(cls, scores: Iterable[ImportanceScore]) -> pd.DataFrame:
        """One row per score."""
        rows = [s.to_dict() for s in scores]
        return pd.DataFrame(rows, columns=cls.IMPORTANCE_COLUMNS)

    @classmethod
    def test_frame(cls, results: Iterable[TestResult]) -> pd.DataFrame:
        """One row per test result."""
        return pd.DataFrame([r.to_row() for r in results], columns=cls.TEST_COLUMNS)

    @classmethod
    def format_digest(cls, metrics: Sequence[Mapping[str, Any]]) -> str:
        """
        One-line summary of benchmark metrics.

        Args:
            metrics: Metric records with ``estimator``, ``n`` and metric fields

        Returns:
            Text like ``sobol_cpi(1)@n=1000 auc=0.981 power=0.84 type1=0.04 | ...``
        """
        if not metrics:
            return "no results"
        parts = []
        for record in metrics:
            values = " ".join(
                f"{name}={_short(record.get(name))}" for name in cls.DIGEST_METRICS
            )
            label = f"{record['estimator']}@n={record['n']}"
            if record.get("correction"):
                label += f"[{record['correction']}]"
            parts.append(f"{label} {values}")
        return " | ".join(parts)


def _short(value: Any) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "na"
    return f"{value:.3g}"


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays into JSON/YAML-safe Python values."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    return value
