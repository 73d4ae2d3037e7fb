"""Service running benchmark experiments over repetitions and sweeps."""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.benchmarks.generators import (
    ORACLE_INNER,
    ORACLE_OUTER,
    GroundTruth,
    gen_linear,
    gen_nonlinear,
    gen_polynomial,
)
from src.benchmarks.metrics import mean_bias, metric_auc, rejection_rate
from src.config import ExperimentConfig, GeneratorConfig
from src.data.dataset import Dataset, SplitSpec, split
from src.data.seeding import STAGE_DATA, STAGE_SPLIT, STAGE_VARIANCE, RngSeed, derive_seed
from src.errors import CondimpError
from src.formatters.report_formatter import ReportFormatter
from src.inference.testing import CorrectionSpec, VarianceSpec, test_importance
from src.services.importance_service import ImportanceService


logger = logging.getLogger(__name__)

GROUP_KEYS = ["estimator", "n", "rho", "correction"]


@dataclass
class BenchmarkReport:
    """
    Result of a benchmark run.

    Attributes:
        rows: Tidy frame, one row per repetition x n x rho x estimator x
            feature x correction
        metrics: One record per estimator x n x rho x correction
        failures: Messages of repetitions that raised
        config: Resolved configuration echo
        master_seed: Seed the run is replayable from
        wall_time_seconds: Total run time
    """

    rows: pd.DataFrame
    metrics: List[Dict[str, Any]]
    failures: List[str] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    master_seed: RngSeed = 0
    wall_time_seconds: float = 0.0

    def summary(self) -> Dict[str, Any]:
        """JSON summary: config echo, seed, metrics and failures."""
        return {
            "master_seed": self.master_seed,
            "config": self.config,
            "metrics": self.metrics,
            "failures": self.failures,
            "wall_time_seconds": self.wall_time_seconds,
        }


@dataclass(frozen=True)
class _Unit:
    repetition: int
    n_index: int
    n: int
    rho_index: int
    rho: float


def generate(
    gen: GeneratorConfig,
    n: int,
    rho: float,
    seed: RngSeed,
    oracle_outer: int = ORACLE_OUTER,
    oracle_inner: int = ORACLE_INNER,
) -> Tuple[Dataset, GroundTruth]:
    """Draw a dataset from the configured generator at the given n and rho."""
    if gen.kind == "linear":
        return gen_linear(
            n,
            gen.p,
            rho,
            gen.sparsity,
            seed,
            beta_value=gen.beta_value,
            sigma_noise=gen.sigma_noise,
            snr=gen.snr,
            beta_dist=gen.beta_dist,
        )
    if gen.kind == "nonlinear":
        return gen_nonlinear(
            n,
            gen.p,
            rho,
            seed,
            interaction_weights=tuple(gen.interaction_weights),
            oracle_outer=oracle_outer,
            oracle_inner=oracle_inner,
        )
    return gen_polynomial(
        n,
        gen.p,
        rho,
        gen.degree,
        gen.sparsity,
        seed,
        sigma_noise=gen.sigma_noise,
        oracle_outer=oracle_outer,
        oracle_inner=oracle_inner,
    )


def expand_estimators(config: ExperimentConfig) -> List[Dict[str, Any]]:
    """Estimator entries with the n_cal sweep applied to sobol_cpi."""
    entries: List[Dict[str, Any]] = []
    for est in config.estimators:
        if est.name == "sobol_cpi" and est.n_cal is None and config.sweep.n_cal:
            for n_cal in config.sweep.n_cal:
                entries.append({"name": est.name, "n_cal": n_cal, "features": est.features})
        elif est.name == "sobol_cpi":
            entries.append({"name": est.name, "n_cal": est.n_cal or 1, "features": est.features})
        else:
            entries.append({"name": est.name, "n_cal": est.n_cal, "features": est.features})
    return entries


def _run_unit(
    config: ExperimentConfig, unit: _Unit, oracle_outer: int, oracle_inner: int
) -> List[Dict[str, Any]]:
    seed = derive_seed(config.master_seed, unit.repetition, unit.n_index, unit.rho_index)
    ds, truth = generate(
        config.generator,
        unit.n,
        unit.rho,
        derive_seed(seed, STAGE_DATA),
        oracle_outer,
        oracle_inner,
    )
    train, test = split(
        ds, SplitSpec(1.0 - config.generator.test_fraction, derive_seed(seed, STAGE_SPLIT))
    )
    service = ImportanceService(
        model_spec=config.model.to_spec(),
        sampler_spec=config.sampler_model.to_spec(),
        restricted_spec=config.restricted_spec(),
        sampling_scheme=config.sampling_scheme,
    )
    inference = config.inference
    var_spec = VarianceSpec(inference.variance, inference.bootstrap_reps)
    corrections = [
        CorrectionSpec(kind, "auto" if inference.c is None else inference.c)
        for kind in inference.corrections
    ]
    effective_n = test.n if inference.effective_n == "test" else train.n

    entries = expand_estimators(config)
    # one full model and one sampler set serve every entry of the unit
    model, samplers = service.prepare(entries, train, seed)

    rows: List[Dict[str, Any]] = []
    for entry in entries:
        started = time.perf_counter()
        scores = service.estimate(entry, train, test, seed, model, samplers)
        elapsed = time.perf_counter() - started
        label = entry["name"] if entry["name"] != "sobol_cpi" else f"sobol_cpi({entry['n_cal']})"
        for score in scores:
            base = {
                "repetition": unit.repetition,
                "n": unit.n,
                "rho": unit.rho,
                "estimator": label,
                "n_cal": entry["n_cal"],
                "feature": score.j,
                "estimate": score.estimate,
                "tsi": float(truth.tsi[score.j]),
                "active": bool(truth.active_set[score.j]),
                "wall_time_seconds": elapsed / max(len(scores), 1),
            }
            if not corrections:
                rows.append({**base, "se": np.nan, "p_value": np.nan, "reject": None, "correction": ""})
            for corr in corrections:
                result = test_importance(
                    score,
                    var_spec,
                    corr,
                    inference.alpha,
                    effective_n,
                    derive_seed(seed, STAGE_VARIANCE, score.j),
                    test.y,
                )
                rows.append(
                    {
                        **base,
                        "se": result.se,
                        "p_value": result.p_value,
                        "reject": result.reject,
                        "correction": corr.kind,
                    }
                )
    return rows


def _safe_unit(
    config: ExperimentConfig, unit: _Unit, oracle_outer: int, oracle_inner: int
) -> Tuple[List[Dict[str, Any]], Optional[str]]:
    try:
        return _run_unit(config, unit, oracle_outer, oracle_inner), None
    except Exception as e:
        message = f"repetition {unit.repetition} (n={unit.n}, rho={unit.rho}): {e}"
        logger.warning(f"Repetition failed: {message}", exc_info=True)
        return [], message


def _auc_per_repetition(group: pd.DataFrame) -> float:
    values = []
    for _, rep in group.groupby("repetition"):
        active = rep["active"].to_numpy(dtype=bool)
        if active.all() or not active.any():
            continue
        values.append(metric_auc(rep["estimate"].to_numpy(dtype=float), active))
    return float(np.mean(values)) if values else float("nan")


def aggregate_metrics(rows: pd.DataFrame) -> List[Dict[str, Any]]:
    """Metric record per estimator x n x rho x correction."""
    if rows.empty:
        return []
    metrics = []
    for key, group in rows.groupby(GROUP_KEYS, sort=True, dropna=False):
        estimator, n, rho, correction = key
        active = group["active"].to_numpy(dtype=bool)
        estimates = group["estimate"].to_numpy(dtype=float)
        tsi = group["tsi"].to_numpy(dtype=float)
        rejects = group["reject"].fillna(False).to_numpy(dtype=bool)
        has_test = bool(correction)
        metrics.append(
            {
                "estimator": estimator,
                "n": int(n),
                "rho": float(rho),
                "correction": correction,
                "repetitions": int(group["repetition"].nunique()),
                "auc": _auc_per_repetition(group),
                "mean_bias_null": mean_bias(estimates, tsi, ~active),
                "mean_bias_active": mean_bias(estimates, tsi, active),
                "power": rejection_rate(rejects, active) if has_test else float("nan"),
                "type1": rejection_rate(rejects, ~active) if has_test else float("nan"),
                "wall_time_seconds": float(group["wall_time_seconds"].sum()),
            }
        )
    return metrics


class BenchmarkService:
    """
    Runs an experiment: repetitions x sample sizes x correlations x estimators.

    Repetitions are independent units; with more than one worker they run in
    a process pool. Results are ordered by unit whatever the worker count.
    """

    def __init__(
        self,
        workers: Optional[int] = None,
        oracle_outer: int = ORACLE_OUTER,
        oracle_inner: int = ORACLE_INNER,
    ):
        """
        Initialize benchmark service.

        Args:
            workers: Worker processes (default: logical CPU count)
            oracle_outer: Outer draws of Monte-Carlo TSI oracles
            oracle_inner: Inner draws of Monte-Carlo TSI oracles
        """
        self.workers = workers or os.cpu_count() or 1
        self.oracle_outer = oracle_outer
        self.oracle_inner = oracle_inner

    def units(self, config: ExperimentConfig) -> List[_Unit]:
        ns = config.sweep.n or [config.generator.n]
        rhos = config.sweep.rho or [config.generator.rho]
        return [
            _Unit(rep, i, n, k, rho)
            for rep in range(config.repetitions)
            for i, n in enumerate(ns)
            for k, rho in enumerate(rhos)
        ]

    def run_experiment(self, config: ExperimentConfig) -> BenchmarkReport:
        """
        Run every unit and aggregate metrics.

        Failed units are logged and listed in the report; the run continues.

        Raises:
            CondimpError: Every unit failed
        """
        started = time.perf_counter()
        units = self.units(config)
        logger.info(
            f"Running {len(units)} units ({config.repetitions} repetitions) "
            f"on {min(self.workers, len(units))} workers"
        )
        if self.workers <= 1 or len(units) <= 1:
            outcomes = [_safe_unit(config, u, self.oracle_outer, self.oracle_inner) for u in units]
        else:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(units))) as pool:
                futures = [
                    pool.submit(_safe_unit, config, u, self.oracle_outer, self.oracle_inner)
                    for u in units
                ]
                outcomes = [f.result() for f in futures]

        rows: List[Dict[str, Any]] = []
        failures: List[str] = []
        for unit_rows, failure in outcomes:
            rows.extend(unit_rows)
            if failure is not None:
                failures.append(failure)
        if failures and len(failures) == len(units):
            raise CondimpError(f"All {len(units)} repetitions failed; first error: {failures[0]}")

        frame = pd.DataFrame(rows, columns=ReportFormatter.BENCHMARK_COLUMNS)
        report = BenchmarkReport(
            rows=frame,
            metrics=aggregate_metrics(frame),
            failures=failures,
            config=config.model_dump(mode="json"),
            master_seed=config.master_seed,
            wall_time_seconds=time.perf_counter() - started,
        )
        logger.info(
            f"Benchmark finished: {len(frame)} rows, {len(failures)} failures, "
            f"{report.wall_time_seconds:.1f}s"
        )
        return report


def run_experiment(config: ExperimentConfig, workers: Optional[int] = 1) -> BenchmarkReport:
    """Run a benchmark with default oracle sizes."""
    return BenchmarkService(workers=workers).run_experiment(config)
