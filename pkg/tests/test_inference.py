"""Tests for variance estimation and the corrected one-sided tests."""

import numpy as np
import pytest

from src.benchmarks.generators import gen_linear
from src.data.dataset import SplitSpec, split
from src.data.seeding import derive_seed, rng_from
from src.errors import InvalidParameterError
from src.estimators.scores import ImportanceScore, make_score
from src.inference import (
    CorrectionSpec,
    VarianceSpec,
    correction_term,
    influence_function,
    resolve_c,
    run_feature_tests,
    test_importance as run_test,
    variance_bootstrap,
    variance_influence,
    variance_sample,
)
from src.learners.base import LearnerSpec
from src.services.importance_service import ImportanceService

SAMPLE = VarianceSpec()
NO_CORRECTION = CorrectionSpec("none", 0.0)


def _score(diffs, j=0, estimator="loco", n_cal=None):
    diffs = np.asarray(diffs, dtype=float)
    return ImportanceScore(j, estimator, n_cal, float(diffs.mean()), diffs, diffs.size, 0)


class TestVariance:
    def test_two_point_example(self):
        assert variance_sample(_score([0.0, 2.0])) == pytest.approx(1.0)

    def test_constant_differences(self):
        assert variance_sample(_score(np.full(10, 3.0))) == 0.0

    def test_influence_identity(self):
        rng = rng_from(0)
        for _ in range(100):
            size = int(rng.integers(2, 500))
            full = rng.exponential(rng.uniform(0.1, 10.0), size)
            reduced = full + rng.standard_normal(size) + rng.uniform(0.0, 2.0)
            score = make_score(0, "sobol_cpi", 10, full, reduced, 0, scale=rng.uniform(0.5, 1.0))
            assert variance_influence(score) == pytest.approx(variance_sample(score), rel=1e-12)

    def test_influence_from_loss_vectors(self):
        score = make_score(0, "sobol_cpi", 1, [1.0, 2.0, 3.0], [2.0, 6.0, 7.0], 0, scale=0.5)
        # reduced centered (-3, 1, 2), full centered (-1, 0, 1)
        assert np.allclose(influence_function(score), [-1.0, 0.5, 0.5])

    def test_influence_without_losses(self):
        phi = influence_function(_score([1.0, 2.0, 6.0]))
        assert np.allclose(phi, [-2.0, -1.0, 3.0])

    def test_scale_survives_scores_file(self):
        score = make_score(2, "sobol_cpi", 3, [1.0, 2.0], [2.0, 5.0], 0, scale=0.75)
        restored = ImportanceScore.from_dict(score.to_dict(include_samples=True))
        assert restored.scale == 0.75
        assert np.allclose(influence_function(restored), influence_function(score))

    def test_influence_on_fitted_scores(self, linear_split):
        train, test, _ = linear_split
        ols = LearnerSpec("ols")
        entries = [{"name": "sobol_cpi", "n_cal": 10}, {"name": "loco_w"}, {"name": "pfi"}]
        for score in ImportanceService(ols, ols).run(entries, train, test, seed=6, features=[0, 1]):
            assert score.loss_full.size == score.n_test
            assert variance_influence(score) == pytest.approx(variance_sample(score), rel=1e-9)

    def test_bootstrap_matches_clt(self):
        score = _score(rng_from(1).standard_normal(1000))
        boot = variance_bootstrap(score, reps=500, seed=2)
        assert boot == pytest.approx(1 / 1000, rel=0.2)
        assert 0.5 <= boot / variance_sample(score) <= 2.0

    def test_bootstrap_is_seeded(self):
        score = _score(rng_from(3).standard_normal(200))
        assert variance_bootstrap(score, 100, seed=4) == variance_bootstrap(score, 100, seed=4)

    def test_bootstrap_needs_enough_reps(self):
        with pytest.raises(InvalidParameterError):
            variance_bootstrap(_score([0.0, 1.0, 2.0]), reps=10, seed=0)
        with pytest.raises(InvalidParameterError):
            VarianceSpec("bootstrap", 49)

    def test_single_sample(self):
        with pytest.raises(InvalidParameterError):
            variance_sample(_score([1.0]))

    def test_unknown_method(self):
        with pytest.raises(InvalidParameterError):
            VarianceSpec("jackknife")


class TestCorrections:
    def test_rates(self):
        for kind, expected in [("none", 0.0), ("sqrt", 0.1), ("linear", 0.01), ("quadratic", 1e-4)]:
            assert correction_term(CorrectionSpec(kind, 1.0), 1.0, 100) == pytest.approx(expected)

    def test_thresholds_ordered(self):
        score = _score(rng_from(5).standard_normal(400) + 0.05)
        thresholds = [
            run_test(score, SAMPLE, CorrectionSpec(kind, 1.0), 0.05).threshold
            for kind in ("none", "quadratic", "linear", "sqrt")
        ]
        assert thresholds == sorted(thresholds)

    def test_threshold_decreases_with_n(self):
        corr = CorrectionSpec("sqrt", 2.0)
        values = [correction_term(corr, 2.0, n) for n in (10, 100, 1000)]
        assert values[0] > values[1] > values[2]

    def test_auto_c_is_response_sd(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        assert resolve_c(CorrectionSpec("sqrt"), y) == pytest.approx(np.std(y, ddof=1))
        with pytest.raises(InvalidParameterError):
            resolve_c(CorrectionSpec("sqrt"), None)

    def test_invalid_specs(self):
        with pytest.raises(InvalidParameterError):
            CorrectionSpec("cubic", 1.0)
        with pytest.raises(InvalidParameterError):
            CorrectionSpec("sqrt", -1.0)
        with pytest.raises(InvalidParameterError):
            correction_term(CorrectionSpec("sqrt", 1.0), 1.0, 0)


class TestImportanceTest:
    def test_zero_variance_positive_estimate_rejects(self):
        result = run_test(_score(np.full(50, 0.5)), SAMPLE, CorrectionSpec("linear", 1.0), 0.05)
        assert result.se == 0.0
        assert result.reject
        assert result.p_value == 0.0

    def test_zero_variance_at_threshold_retains(self):
        result = run_test(_score(np.full(4, 0.25)), SAMPLE, CorrectionSpec("linear", 1.0), 0.05)
        assert result.additive == pytest.approx(0.25)
        assert not result.reject
        assert result.p_value == 1.0

    def test_zero_estimate_without_correction_retains(self):
        result = run_test(_score(np.zeros(20)), SAMPLE, NO_CORRECTION, 0.05)
        assert not result.reject

    def test_decision_matches_threshold(self):
        rng = rng_from(6)
        for shift in (-0.1, 0.0, 0.05, 0.2):
            result = run_test(_score(rng.standard_normal(300) + shift), SAMPLE, NO_CORRECTION, 0.05)
            assert result.reject == (result.statistic >= result.threshold)
            assert result.reject == (result.p_value <= 0.05)

    def test_effective_sample_size(self):
        score = _score(rng_from(7).standard_normal(100))
        corr = CorrectionSpec("linear", 1.0)
        assert run_test(score, SAMPLE, corr, 0.05).additive == pytest.approx(0.01)
        assert run_test(score, SAMPLE, corr, 0.05, n=1000).additive == pytest.approx(0.001)

    def test_auto_c_uses_test_responses(self):
        y = rng_from(8).normal(scale=3.0, size=100)
        result = run_test(_score(np.zeros(100)), SAMPLE, CorrectionSpec("sqrt"), 0.05, y_test=y)
        assert result.c == pytest.approx(np.std(y, ddof=1))

    def test_bootstrap_variance(self):
        score = _score(rng_from(9).standard_normal(500) + 1.0)
        result = run_test(score, VarianceSpec("bootstrap", 100), NO_CORRECTION, 0.05, seed=1)
        assert result.reject
        assert result.se == pytest.approx(np.sqrt(variance_sample(score)), rel=0.3)

    def test_bad_alpha(self):
        with pytest.raises(InvalidParameterError):
            run_test(_score([0.0, 1.0]), SAMPLE, NO_CORRECTION, 1.5)

    def test_row_fields(self):
        row = run_test(_score([0.0, 1.0], j=4), SAMPLE, CorrectionSpec("sqrt", 1.0), 0.1).to_row()
        assert row["feature"] == 4
        assert row["feature_name"] == "x4"
        assert row["correction"] == "sqrt"
        assert row["estimator"] == "loco"


class TestRunFeatureTests:
    def test_empty(self):
        assert run_feature_tests([], SAMPLE, NO_CORRECTION, 0.05) == []

    def test_singleton(self):
        results = run_feature_tests([_score([1.0, 2.0], j=2)], SAMPLE, NO_CORRECTION, 0.05)
        assert [r.j for r in results] == [2]

    def test_ordered_by_feature(self):
        scores = [_score([0.0, float(j)], j=j) for j in (3, 0, 2, 1)]
        results = run_feature_tests(scores, SAMPLE, NO_CORRECTION, 0.05)
        assert [r.j for r in results] == [0, 1, 2, 3]

    def test_label_carries_n_cal(self):
        score = _score([0.0, 1.0], estimator="sobol_cpi", n_cal=10)
        assert run_feature_tests([score], SAMPLE, NO_CORRECTION, 0.05)[0].estimator == "sobol_cpi(10)"


@pytest.mark.slow
class TestCalibration:
    def test_type_one_error_and_power(self):
        ols = LearnerSpec("ols")
        service = ImportanceService(ols, ols)
        estimators = [{"name": "sobol_cpi", "n_cal": 1}, {"name": "loco"}]
        corr = CorrectionSpec("linear")
        reps = 100
        power, type_one = {}, {}
        for n in (500, 2000):
            rejects = {"sobol_cpi(1)": [], "loco": []}
            nulls = {"sobol_cpi(1)": [], "loco": []}
            for rep in range(reps):
                seed = derive_seed(808, n, rep)
                ds, truth = gen_linear(n, 30, 0.6, 0.25, derive_seed(seed, 0), beta_dist="normal", snr=2.0)
                train, test = split(ds, SplitSpec(0.5, derive_seed(seed, 1)))
                scores = service.run(estimators, train, test, seed)
                for label in rejects:
                    group = [s for s in scores if s.label == label]
                    results = run_feature_tests(group, SAMPLE, corr, 0.05, seed=seed, y_test=test.y)
                    decided = np.array([r.reject for r in results])
                    rejects[label].append(decided[truth.active_set])
                    nulls[label].append(decided[~truth.active_set])
            for label in rejects:
                power[label, n] = float(np.mean(np.concatenate(rejects[label])))
                type_one[label, n] = float(np.mean(np.concatenate(nulls[label])))
            n_null = sum(x.size for x in nulls["loco"])
            bound = 0.05 + 2 * np.sqrt(0.05 * 0.95 / n_null)
            assert type_one["sobol_cpi(1)", n] <= bound
            assert type_one["loco", n] <= bound
        assert power["sobol_cpi(1)", 2000] >= power["loco", 2000]
        assert power["sobol_cpi(1)", 2000] > power["sobol_cpi(1)", 500]
