"""Command-line entry point for condimp.

Usage:
    python -m src.main generate  --config configs/linear.yaml --out results/
    python -m src.main estimate  --config configs/linear.yaml --out results/ [--data data.csv]
    python -m src.main test      --config configs/linear.yaml --out results/ [--scores scores.json]
    python -m src.main benchmark --config configs/linear.yaml --out results/ --workers 4
    python -m src.main oracle    --config configs/nonlinear.yaml --out results/

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.config import ExperimentConfig, Settings, get_settings, load_experiment_config
from src.data.dataset import (
    SplitSpec,
    read_dataset_csv,
    split,
    write_covariance_csv,
    write_dataset_csv,
)
from src.data.seeding import STAGE_DATA, STAGE_SPLIT, STAGE_VARIANCE, derive_seed
from src.errors import ConfigError, InvalidParameterError, UsageError
from src.estimators.scores import ImportanceScore
from src.formatters.report_formatter import ReportFormatter
from src.inference.testing import CorrectionSpec, VarianceSpec, run_feature_tests
from src.logging_setup import configure_logging
from src.services.benchmark_service import BenchmarkService, expand_estimators, generate
from src.services.importance_service import ImportanceService


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

DATASET_FILE = "dataset.csv"
GROUND_TRUTH_FILE = "ground_truth.json"
IMPORTANCE_FILE = "importance.csv"
SCORES_FILE = "scores.json"
TESTS_FILE = "tests.csv"
BENCHMARK_FILE = "benchmark.csv"
SUMMARY_FILE = "summary.json"
ORACLE_FILE = "oracle.json"
COVARIANCE_FILE = "covariance.csv"


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="Experiment YAML file")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--seed", type=int, default=None, help="Master seed override")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Config override, e.g. generator.n=500 (repeatable)",
    )
    common.add_argument("--workers", type=int, default=None, help="Parallel workers")
    common.add_argument("--quiet", action="store_true", help="Only log warnings and errors")

    parser = argparse.ArgumentParser(
        prog="condimp", description="Conditional feature importance estimation and testing"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="Write a synthetic dataset")
    estimate = sub.add_parser("estimate", parents=[common], help="Estimate feature importance")
    estimate.add_argument("--data", type=Path, default=None, help="Dataset CSV (default: generate)")
    test = sub.add_parser("test", parents=[common], help="Test importance scores")
    test.add_argument("--scores", type=Path, default=None, help="scores.json from estimate")
    sub.add_parser("benchmark", parents=[common], help="Run a benchmark sweep")
    sub.add_parser("oracle", parents=[common], help="Compute oracle importance")
    return parser


def _header(config: ExperimentConfig) -> List[str]:
    return ReportFormatter.header_lines(config.model_dump(mode="json"), config.master_seed)


def _output_dir(args: argparse.Namespace, settings: Settings) -> Path:
    out = args.out if args.out is not None else Path(settings.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def resolve_workers(args: argparse.Namespace, settings: Settings) -> int:
    """Worker count: --workers, then CONDIMP_WORKERS, then the CPU count."""
    return args.workers or settings.workers or os.cpu_count() or 1


def _generate_data(config: ExperimentConfig, settings: Settings):
    gen = config.generator
    return generate(
        gen,
        gen.n,
        gen.rho,
        derive_seed(config.master_seed, STAGE_DATA),
        settings.oracle_outer,
        settings.oracle_inner,
    )


def cmd_generate(config: ExperimentConfig, args: argparse.Namespace, settings: Settings) -> int:
    """Write dataset.csv and ground_truth.json."""
    out = _output_dir(args, settings)
    ds, truth = _generate_data(config, settings)
    write_dataset_csv(ds, out / DATASET_FILE, _header(config))
    ReportFormatter.write_json(
        {
            "master_seed": config.master_seed,
            "config": config.model_dump(mode="json"),
            "ground_truth": truth.to_dict(),
        },
        out / GROUND_TRUTH_FILE,
    )
    logger.info(f"Wrote {ds.n} rows x {ds.p} features to {out / DATASET_FILE}")
    return EXIT_OK


def cmd_estimate(config: ExperimentConfig, args: argparse.Namespace, settings: Settings) -> int:
    """Write importance.csv and scores.json."""
    out = _output_dir(args, settings)
    if args.data is not None:
        if not args.data.exists():
            raise UsageError(f"Dataset not found: {args.data}")
        ds = read_dataset_csv(args.data)
    else:
        ds, _ = _generate_data(config, settings)
    train, test = split(
        ds,
        SplitSpec(
            1.0 - config.generator.test_fraction, derive_seed(config.master_seed, STAGE_SPLIT)
        ),
    )
    service = ImportanceService(
        model_spec=config.model.to_spec(),
        sampler_spec=config.sampler_model.to_spec(),
        restricted_spec=config.restricted_spec(),
        sampling_scheme=config.sampling_scheme,
        workers=resolve_workers(args, settings),
    )
    scores = service.run(expand_estimators(config), train, test, config.master_seed)

    ReportFormatter.write_csv(
        ReportFormatter.importance_frame(scores), out / IMPORTANCE_FILE, _header(config)
    )
    ReportFormatter.write_json(
        {
            "master_seed": config.master_seed,
            "config": config.model_dump(mode="json"),
            "n_train": train.n,
            "y_test": test.y.tolist(),
            "scores": [s.to_dict(include_samples=True) for s in scores],
        },
        out / SCORES_FILE,
    )
    logger.info(f"Wrote {len(scores)} importance scores to {out / IMPORTANCE_FILE}")
    return EXIT_OK


def _load_scores(path: Path) -> Dict[str, Any]:
    if path.is_dir():
        path = path / SCORES_FILE
    if not path.exists():
        raise UsageError(
            f"Missing variance inputs: {path} not found (run 'estimate' first or pass --scores)"
        )
    return ReportFormatter.read_json(path)


def cmd_test(config: ExperimentConfig, args: argparse.Namespace, settings: Settings) -> int:
    """Write tests.csv from the per-sample differences in scores.json."""
    out = _output_dir(args, settings)
    payload = _load_scores(args.scores if args.scores is not None else out)
    try:
        scores = [ImportanceScore.from_dict(s) for s in payload["scores"]]
    except (KeyError, TypeError) as e:
        raise UsageError(f"Malformed scores file: {e}")

    inference = config.inference
    var_spec = VarianceSpec(inference.variance, inference.bootstrap_reps)
    y_test = np.asarray(payload.get("y_test") or [], dtype=float)
    if inference.c is None and y_test.size < 2:
        raise UsageError("c='auto' needs y_test in the scores file")
    effective_n: Optional[int] = None
    if inference.effective_n == "train":
        effective_n = int(payload["n_train"])

    groups: Dict[str, List[ImportanceScore]] = {}
    for score in scores:
        groups.setdefault(score.label, []).append(score)
    results = []
    for kind in inference.corrections or ["none"]:
        corr = CorrectionSpec(kind, "auto" if inference.c is None else inference.c)
        for group in groups.values():
            results.extend(
                run_feature_tests(
                    group,
                    var_spec,
                    corr,
                    inference.alpha,
                    effective_n,
                    derive_seed(config.master_seed, STAGE_VARIANCE),
                    y_test,
                )
            )
    ReportFormatter.write_csv(ReportFormatter.test_frame(results), out / TESTS_FILE, _header(config))
    rejected = sum(r.reject for r in results)
    logger.info(f"Wrote {len(results)} test results ({rejected} rejections) to {out / TESTS_FILE}")
    return EXIT_OK


def cmd_benchmark(config: ExperimentConfig, args: argparse.Namespace, settings: Settings) -> int:
    """Write benchmark.csv and summary.json; print the metric digest."""
    out = _output_dir(args, settings)
    service = BenchmarkService(
        workers=resolve_workers(args, settings),
        oracle_outer=settings.oracle_outer,
        oracle_inner=settings.oracle_inner,
    )
    report = service.run_experiment(config)
    ReportFormatter.write_csv(report.rows, out / BENCHMARK_FILE, _header(config))
    ReportFormatter.write_json(report.summary(), out / SUMMARY_FILE)
    if report.failures:
        logger.warning(f"{len(report.failures)} repetitions failed; see {out / SUMMARY_FILE}")
    print(ReportFormatter.format_digest(report.metrics))
    return EXIT_OK


def cmd_oracle(config: ExperimentConfig, args: argparse.Namespace, settings: Settings) -> int:
    """Write oracle.json and covariance.csv; print the TSI vector."""
    out = _output_dir(args, settings)
    _, truth = _generate_data(config, settings)
    ReportFormatter.write_json(
        {
            "master_seed": config.master_seed,
            "config": config.model_dump(mode="json"),
            "oracle_outer": settings.oracle_outer,
            "oracle_inner": settings.oracle_inner,
            "ground_truth": truth.to_dict(),
        },
        out / ORACLE_FILE,
    )
    write_covariance_csv(truth.cov.sigma, out / COVARIANCE_FILE)
    print(" ".join(f"x{j}={t:.6g}" for j, t in enumerate(truth.tsi)))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "estimate": cmd_estimate,
    "test": cmd_test,
    "benchmark": cmd_benchmark,
    "oracle": cmd_oracle,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ValueError as e:
        configure_logging(quiet=args.quiet)
        logger.error(f"Invalid settings: {e}")
        return EXIT_USAGE
    configure_logging(settings.log_level, args.quiet, settings.log_format)

    try:
        if args.workers is not None and args.workers < 1:
            raise UsageError("--workers must be positive")
        config = load_experiment_config(
            args.config, args.overrides, args.seed, settings.default_seed
        )
        return COMMANDS[args.command](config, args, settings)
    except (ConfigError, UsageError, InvalidParameterError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
