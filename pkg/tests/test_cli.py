"""End-to-end tests of the command-line subcommands."""

import json

import numpy as np
import pandas as pd
import pytest

from src.data.dataset import read_dataset_csv
from src.formatters.report_formatter import ReportFormatter
import src.main
from src.main import EXIT_OK, EXIT_USAGE, main
from src.services.benchmark_service import BenchmarkService
from src.services.importance_service import ImportanceService


EXPERIMENT = """
generator:
  kind: linear
  n: 300
  p: 6
  rho: 0.5
  sparsity: 0.5
model:
  kind: ols
sampler_model:
  kind: ols
estimators:
  - name: cpi
  - name: sobol_cpi
    n_cal: 1
  - name: loco
inference:
  corrections: [none, linear]
repetitions: 2
master_seed: 4
"""


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch):
    for name in ("LOG_LEVEL", "CONDIMP_SEED", "CONDIMP_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("CONDIMP_ORACLE_OUTER", "2000")
    monkeypatch.setenv("CONDIMP_ORACLE_INNER", "10")


@pytest.fixture
def experiment(config_file):
    return config_file(EXPERIMENT)


def run(command, config, out, *extra):
    return main([command, "--config", str(config), "--out", str(out), "--quiet", *extra])


class TestGenerate:
    def test_writes_dataset_and_truth(self, experiment, tmp_path):
        assert run("generate", experiment, tmp_path) == EXIT_OK
        ds = read_dataset_csv(tmp_path / "dataset.csv")
        truth = json.loads((tmp_path / "ground_truth.json").read_text())
        assert ds.n == 300
        assert ds.p == 6
        assert len(truth["ground_truth"]["tsi"]) == 6
        assert sum(truth["ground_truth"]["active_set"]) == 3
        assert truth["master_seed"] == 4

    def test_header_echoes_seed(self, experiment, tmp_path):
        run("generate", experiment, tmp_path)
        first = (tmp_path / "dataset.csv").read_text().splitlines()[0]
        assert first == "# master_seed: 4"

    def test_byte_identical_for_same_seed(self, experiment, tmp_path):
        run("generate", experiment, tmp_path / "a")
        run("generate", experiment, tmp_path / "b")
        run("generate", experiment, tmp_path / "c", "--seed", "5")
        a = (tmp_path / "a" / "dataset.csv").read_bytes()
        assert a == (tmp_path / "b" / "dataset.csv").read_bytes()
        assert a != (tmp_path / "c" / "dataset.csv").read_bytes()

    def test_environment_seed_fallback(self, config_file, tmp_path, monkeypatch):
        path = config_file(EXPERIMENT.replace("master_seed: 4\n", ""))
        monkeypatch.setenv("CONDIMP_SEED", "77")
        assert run("generate", path, tmp_path) == EXIT_OK
        truth = json.loads((tmp_path / "ground_truth.json").read_text())
        assert truth["master_seed"] == 77

    def test_override(self, experiment, tmp_path):
        assert run("generate", experiment, tmp_path, "--set", "generator.n=50") == EXIT_OK
        assert read_dataset_csv(tmp_path / "dataset.csv").n == 50

    def test_nonlinear_needs_five_features(self, experiment, tmp_path):
        code = run(
            "generate", experiment, tmp_path, "--set", "generator.kind=nonlinear", "--set", "generator.p=3"
        )
        assert code == EXIT_USAGE


class TestEstimate:
    def test_sobol_is_half_cpi(self, experiment, tmp_path):
        assert run("estimate", experiment, tmp_path) == EXIT_OK
        frame = ReportFormatter.read_csv(tmp_path / "importance.csv")
        assert len(frame) == 18
        cpi = frame[frame["estimator"] == "cpi"].set_index("feature")["estimate"]
        sobol = frame[frame["estimator"] == "sobol_cpi"].set_index("feature")["estimate"]
        assert np.allclose(sobol.to_numpy(), cpi.to_numpy() / 2, rtol=1e-12, atol=1e-15)

    def test_scores_file(self, experiment, tmp_path):
        run("estimate", experiment, tmp_path)
        payload = json.loads((tmp_path / "scores.json").read_text())
        assert payload["n_train"] == 150
        assert len(payload["y_test"]) == 150
        first = payload["scores"][0]
        assert len(first["per_sample_diffs"]) == first["n_test"] == 150

    def test_from_generated_data(self, experiment, tmp_path):
        run("generate", experiment, tmp_path)
        code = run("estimate", experiment, tmp_path, "--data", str(tmp_path / "dataset.csv"))
        assert code == EXIT_OK
        generated = ReportFormatter.read_csv(tmp_path / "importance.csv")
        run("estimate", experiment, tmp_path / "fresh")
        fresh = ReportFormatter.read_csv(tmp_path / "fresh" / "importance.csv")
        assert np.allclose(generated["estimate"], fresh["estimate"], rtol=1e-12)

    def test_missing_data_file(self, experiment, tmp_path):
        assert run("estimate", experiment, tmp_path, "--data", str(tmp_path / "none.csv")) == EXIT_USAGE

    def test_workers_flag(self, experiment, tmp_path):
        assert run("estimate", experiment, tmp_path / "one", "--workers", "1") == EXIT_OK
        assert run("estimate", experiment, tmp_path / "three", "--workers", "3") == EXIT_OK
        one = ReportFormatter.read_csv(tmp_path / "one" / "importance.csv")
        three = ReportFormatter.read_csv(tmp_path / "three" / "importance.csv")
        assert one["estimate"].tolist() == three["estimate"].tolist()

    def test_zero_workers(self, experiment, tmp_path):
        assert run("estimate", experiment, tmp_path, "--workers", "0") == EXIT_USAGE


class TestWorkerDefaults:
    @pytest.fixture
    def captured(self, monkeypatch):
        seen = {}

        class RecordingImportance(ImportanceService):
            def __init__(self, *args, **kwargs):
                super().__init__(*args, **kwargs)
                seen["estimate"] = self.workers

        class RecordingBenchmark(BenchmarkService):
            def __init__(self, *args, **kwargs):
                super().__init__(*args, **kwargs)
                seen["benchmark"] = self.workers

        monkeypatch.setattr(src.main, "ImportanceService", RecordingImportance)
        monkeypatch.setattr(src.main, "BenchmarkService", RecordingBenchmark)
        monkeypatch.setattr(src.main.os, "cpu_count", lambda: 3)
        return seen

    def test_cpu_count_when_unset(self, experiment, tmp_path, captured):
        assert run("estimate", experiment, tmp_path) == EXIT_OK
        assert run("benchmark", experiment, tmp_path) == EXIT_OK
        assert captured == {"estimate": 3, "benchmark": 3}

    def test_environment_setting(self, experiment, tmp_path, captured, monkeypatch):
        monkeypatch.setenv("CONDIMP_WORKERS", "2")
        run("estimate", experiment, tmp_path)
        run("benchmark", experiment, tmp_path)
        assert captured == {"estimate": 2, "benchmark": 2}

    def test_flag_wins(self, experiment, tmp_path, captured, monkeypatch):
        monkeypatch.setenv("CONDIMP_WORKERS", "2")
        run("estimate", experiment, tmp_path, "--workers", "1")
        run("benchmark", experiment, tmp_path, "--workers", "1")
        assert captured == {"estimate": 1, "benchmark": 1}


class TestTest:
    def test_after_estimate(self, experiment, tmp_path):
        run("estimate", experiment, tmp_path)
        assert run("test", experiment, tmp_path) == EXIT_OK
        frame = ReportFormatter.read_csv(tmp_path / "tests.csv")
        # 3 estimators x 6 features x 2 corrections
        assert len(frame) == 36
        assert set(frame["correction"]) == {"none", "linear"}
        assert frame["p_value"].between(0.0, 1.0).all()

    def test_linear_correction_is_stricter(self, experiment, tmp_path):
        run("estimate", experiment, tmp_path)
        run("test", experiment, tmp_path)
        frame = ReportFormatter.read_csv(tmp_path / "tests.csv")
        plain = frame[frame["correction"] == "none"]["reject"].sum()
        corrected = frame[frame["correction"] == "linear"]["reject"].sum()
        assert corrected <= plain

    def test_explicit_scores_path(self, experiment, tmp_path):
        run("estimate", experiment, tmp_path / "est")
        scores = tmp_path / "est" / "scores.json"
        assert run("test", experiment, tmp_path / "out", "--scores", str(scores)) == EXIT_OK

    def test_missing_scores(self, experiment, tmp_path):
        assert run("test", experiment, tmp_path) == EXIT_USAGE

    def test_malformed_scores(self, experiment, tmp_path):
        (tmp_path / "scores.json").write_text(json.dumps({"y_test": [1.0, 2.0]}))
        assert run("test", experiment, tmp_path) == EXIT_USAGE


class TestBenchmark:
    def test_outputs_and_digest(self, experiment, tmp_path, capsys):
        assert run("benchmark", experiment, tmp_path, "--workers", "1") == EXIT_OK
        rows = ReportFormatter.read_csv(tmp_path / "benchmark.csv")
        summary = json.loads((tmp_path / "summary.json").read_text())
        # 2 repetitions x 3 estimators x 6 features x 2 corrections
        assert len(rows) == 72
        assert summary["master_seed"] == 4
        assert summary["failures"] == []
        digest = capsys.readouterr().out
        assert "sobol_cpi(1)@n=300" in digest
        assert "auc=" in digest

    def test_invalid_config(self, config_file, tmp_path):
        path = config_file(EXPERIMENT + "surprise: true\n")
        assert run("benchmark", path, tmp_path) == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        assert run("benchmark", tmp_path / "absent.yaml", tmp_path) == EXIT_USAGE


class TestOracle:
    def test_linear(self, experiment, tmp_path, capsys):
        assert run("oracle", experiment, tmp_path) == EXIT_OK
        payload = json.loads((tmp_path / "oracle.json").read_text())
        tsi = payload["ground_truth"]["tsi"]
        active = payload["ground_truth"]["active_set"]
        assert all((t > 0) == a for t, a in zip(tsi, active))
        assert capsys.readouterr().out.startswith("x0=")

    def test_covariance_file(self, experiment, tmp_path):
        run("oracle", experiment, tmp_path)
        sigma = pd.read_csv(tmp_path / "covariance.csv", index_col=0)
        assert sigma.shape == (6, 6)
        assert sigma.loc["x0", "x1"] == pytest.approx(0.5)
        assert sigma.loc["x0", "x2"] == pytest.approx(0.25)

    def test_nonlinear(self, experiment, tmp_path):
        code = run("oracle", experiment, tmp_path, "--set", "generator.kind=nonlinear")
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "oracle.json").read_text())
        assert payload["oracle_outer"] == 2000
        assert payload["ground_truth"]["tsi"][5] == 0.0
        assert payload["ground_truth"]["tsi"][0] > 0.0
