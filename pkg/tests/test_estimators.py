"""Tests for PFI, CPI, Sobol-CPI, LOCO and LOCO-W."""

import numpy as np
import pytest

from src.benchmarks.generators import gen_linear, gen_nonlinear
from src.benchmarks.metrics import log_log_slope
from src.data.dataset import Dataset, SplitSpec, split
from src.data.gaussian import sample_gaussian, toeplitz_covariance
from src.data.seeding import derive_seed, rng_from
from src.errors import InvalidParameterError
from src.estimators import ImportanceScore, cpi, loco, loco_w, loss, pfi, sobol_cpi
from src.estimators.removal import half_split
from src.learners.base import LearnerSpec
from src.learners.fitting import constant_model, fit, fixed_linear_model, function_model
from src.sampler import fit_sampler, oracle_gaussian_sampler, sampler_from_model

from tests.conftest import make_linear, train_test

OLS = LearnerSpec("ols")
BETA = [2.0, 0.0, 1.0, 0.0, 0.0]


def _with_duplicate(ds: Dataset, source: int) -> Dataset:
    return Dataset(np.column_stack([ds.x, ds.x[:, source]]), ds.y)


class TestLoss:
    def test_quadratic(self):
        assert np.array_equal(loss("quadratic", [0.0], [3.0]), [9.0])

    def test_zero_one_thresholds_at_half(self):
        assert np.array_equal(loss("zero_one", [0.7, 0.2], [1.0, 1.0]), [0.0, 1.0])
        assert np.array_equal(loss("zero_one", [0.5], [1.0]), [0.0])

    def test_zero_one_needs_binary_labels(self):
        with pytest.raises(InvalidParameterError):
            loss("zero_one", [0.3], [2.0])

    def test_length_mismatch(self):
        with pytest.raises(InvalidParameterError):
            loss("quadratic", [1.0, 2.0], [1.0])

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            loss("hinge", [1.0], [1.0])


class TestPfi:
    def test_identity_permutation_is_zero(self, linear_split):
        train, test, _ = linear_split
        model = fit(OLS, train.x, train.y, seed=0)
        score = pfi(model, test, 0, "quadratic", seed=1, permutation=np.arange(test.n))
        assert score.estimate == 0.0
        assert np.all(score.per_sample_diffs == 0.0)

    def test_ignored_feature_is_zero(self, linear_split):
        _, test, _ = linear_split
        model = fixed_linear_model(BETA)
        assert pfi(model, test, 1, "quadratic", seed=3).estimate == 0.0

    def test_marginal_permutation_doubles_variance(self):
        rng = rng_from(7)
        x = rng.standard_normal((40_000, 3))
        y = 2.0 * x[:, 0] + rng.standard_normal(40_000)
        score = pfi(fixed_linear_model([2.0, 0.0, 0.0]), Dataset(x, y), 0, "quadratic", seed=8)
        assert score.estimate == pytest.approx(8.0, rel=0.1)

    def test_rejects_non_permutation(self, linear_split):
        _, test, _ = linear_split
        with pytest.raises(InvalidParameterError):
            pfi(fixed_linear_model(BETA), test, 0, "quadratic", 0, permutation=np.zeros(test.n))

    def test_dimension_mismatch(self, linear_split):
        _, test, _ = linear_split
        with pytest.raises(InvalidParameterError):
            pfi(fixed_linear_model([1.0, 2.0]), test, 0, "quadratic", seed=0)


class TestCorrelatedNullFeature:
    def test_pfi_flags_it_cpi_does_not(self):
        # x1 carries no signal but is 0.9-correlated with x0; knn uses both
        train, test, _ = train_test(2000, [1.0, 0.0], rho=0.9, sigma=0.5, seed=31)
        model = fit(LearnerSpec("knn", {"k": 25}), train.x, train.y, seed=0)
        sampler = fit_sampler(train.x, 1, OLS, seed=0)
        marginal = pfi(model, test, 1, "quadratic", seed=1).estimate
        conditional = cpi(model, sampler, test, "quadratic", seed=1).estimate
        assert marginal > 0.1
        assert abs(conditional) < 0.03
        assert marginal > 4 * abs(conditional)

    def test_pfi_vanishes_as_ols_learns_to_ignore_it(self):
        medians = []
        for n in (250, 1000, 4000):
            values = []
            for rep in range(50):
                train, test, _ = train_test(
                    n, [1.0, 0.0], rho=0.9, sigma=0.5, seed=derive_seed(32, n, rep)
                )
                model = fit(OLS, train.x, train.y, seed=0)
                values.append(pfi(model, test, 1, "quadratic", seed=rep).estimate)
            medians.append(float(np.median(values)))
        assert medians[0] > medians[1] > medians[2]


class TestCpi:
    def test_exact_reconstruction_is_zero(self):
        rng = rng_from(5)
        x = rng.standard_normal((400, 4))
        x[:, 3] = x[:, 0] + x[:, 1] - x[:, 2]
        y = x @ np.array([1.0, 0.5, 0.0, 2.0]) + rng.standard_normal(400)
        data = Dataset(x, y)
        sampler = fit_sampler(x[:200], 3, OLS, seed=0)
        model = fixed_linear_model([1.0, 0.5, 0.0, 2.0])
        score = cpi(model, sampler, data.take(np.arange(200, 400)), "quadratic", seed=1)
        assert abs(score.estimate) < 1e-8

    def test_null_feature_is_small(self):
        train, test, _ = train_test(800, BETA, seed=21)
        model = fit(OLS, train.x, train.y, seed=0)
        sampler = fit_sampler(train.x, 3, OLS, seed=0)
        assert abs(cpi(model, sampler, test, "quadratic", seed=2).estimate) < 0.05

    def test_half_of_cpi_estimates_tsi(self):
        train, test, _ = train_test(10_000, BETA, seed=22)
        model = fit(OLS, train.x, train.y, seed=0)
        sampler = fit_sampler(train.x, 0, OLS, seed=0)
        score = cpi(model, sampler, test, "quadratic", seed=3)
        assert score.n_cal == 1
        assert score.estimate / 2 == pytest.approx(2.56, rel=0.15)


class TestSobolCpi:
    def test_single_draw_is_half_of_cpi(self):
        checked = 0
        for config in range(10):
            beta = rng_from(config).normal(size=5)
            train, test, _ = train_test(200, beta, rho=0.1 * config, seed=config)
            model = fit(OLS, train.x, train.y, seed=0)
            for j in range(5):
                sampler = fit_sampler(train.x, j, OLS, seed=j)
                seed = derive_seed(config, j)
                full = cpi(model, sampler, test, "quadratic", seed)
                half = sobol_cpi(model, sampler, test, 1, "quadratic", seed)
                assert np.array_equal(half.per_sample_diffs, full.per_sample_diffs / 2)
                assert half.estimate == pytest.approx(full.estimate / 2, abs=1e-12)
                checked += 1
        assert checked == 50

    @pytest.mark.parametrize("n_cal", [1, 2, 10, 100])
    def test_correction_factor(self, linear_split, n_cal):
        train, test, _ = linear_split
        model = fit(OLS, train.x, train.y, seed=0)
        sampler = fit_sampler(train.x, 0, OLS, seed=0)
        corrected = sobol_cpi(model, sampler, test, n_cal, "quadratic", seed=4)
        raw = sobol_cpi(model, sampler, test, n_cal, "quadratic", seed=4, corrected=False)
        assert raw.estimate / corrected.estimate == pytest.approx((n_cal + 1) / n_cal, rel=1e-12)

    def test_oracle_components_recover_tsi(self):
        test, cov = make_linear(20_000, BETA, seed=31)
        sampler = oracle_gaussian_sampler(cov, 0, seed=1)
        score = sobol_cpi(fixed_linear_model(BETA), sampler, test, 100, "quadratic", seed=2)
        assert score.estimate == pytest.approx(2.56, rel=0.1)
        assert score.label == "sobol_cpi(100)"

    def test_oracle_cpi_halved_recovers_tsi(self):
        test, cov = make_linear(20_000, BETA, seed=32)
        sampler = oracle_gaussian_sampler(cov, 0, seed=1)
        score = cpi(fixed_linear_model(BETA), sampler, test, "quadratic", seed=2)
        assert score.estimate / 2 == pytest.approx(2.56, rel=0.1)

    def test_ignored_feature_is_zero(self, linear_split):
        train, test, _ = linear_split
        sampler = fit_sampler(train.x, 1, OLS, seed=0)
        score = sobol_cpi(fixed_linear_model(BETA), sampler, test, 5, "quadratic", seed=0)
        assert np.allclose(score.per_sample_diffs, 0.0, atol=1e-12)

    def test_zero_one_loss_is_unscaled(self):
        rng = rng_from(9)
        x = rng.standard_normal((600, 3))
        y = (x[:, 0] + 0.3 * rng.standard_normal(600) > 0).astype(float)
        data = Dataset(x, y)
        model = function_model(lambda z: 1.0 / (1.0 + np.exp(-4.0 * z[:, 0])), 3)
        sampler = fit_sampler(x[:300], 0, OLS, seed=0)
        score = sobol_cpi(model, sampler, data.take(np.arange(300, 600)), 10, "zero_one", seed=1)
        assert set(np.unique(score.per_sample_diffs)) <= {-1.0, 0.0, 1.0}
        assert score.estimate > 0.1

    def test_zero_one_needs_binary_response(self, linear_split):
        train, test, _ = linear_split
        sampler = fit_sampler(train.x, 0, OLS, seed=0)
        with pytest.raises(InvalidParameterError):
            sobol_cpi(fixed_linear_model(BETA), sampler, test, 2, "zero_one", seed=0)

    def test_sampler_dimension_mismatch(self, linear_split):
        train, test, _ = linear_split
        sampler = fit_sampler(train.x[:, :4], 0, OLS, seed=0)
        with pytest.raises(InvalidParameterError):
            sobol_cpi(fixed_linear_model(BETA), sampler, test, 1, "quadratic", seed=0)

    def test_n_cal_must_be_positive(self, linear_split):
        train, test, _ = linear_split
        sampler = fit_sampler(train.x, 0, OLS, seed=0)
        with pytest.raises(InvalidParameterError):
            sobol_cpi(fixed_linear_model(BETA), sampler, test, 0, "quadratic", seed=0)


class TestLoco:
    def test_duplicate_column_is_uninformative(self):
        train, test, _ = train_test(2000, [1.5, 0.0, 1.0], seed=41)
        train, test = _with_duplicate(train, 0), _with_duplicate(test, 0)
        ridge = LearnerSpec("ridge", {"alpha": 1.0})
        model = fit(ridge, train.x, train.y, seed=0)
        assert abs(loco(model, ridge, train, test, 3, "quadratic", seed=1).estimate) < 0.01

    def test_recovers_tsi(self):
        train, test, _ = train_test(10_000, BETA, seed=42)
        model = fit(OLS, train.x, train.y, seed=0)
        score = loco(model, OLS, train, test, 0, "quadratic", seed=1)
        assert score.estimate == pytest.approx(2.56, rel=0.1)
        assert score.n_test == test.n

    def test_mismatched_model(self, linear_split):
        train, test, _ = linear_split
        with pytest.raises(InvalidParameterError):
            loco(fixed_linear_model([1.0, 1.0]), OLS, train, test, 0, "quadratic", seed=0)


class TestLocoW:
    def test_shared_halves_match_loco(self, linear_split):
        train, test, _ = linear_split
        rows = np.arange(1000)
        score = loco_w(OLS, train, test, 0, "quadratic", seed=5,
                       train_halves=(rows, rows), test_halves=(rows, rows))
        model = fit(OLS, train.x[rows], train.y[rows], seed=0)
        reference = loco(model, OLS, train.take(rows), test.take(rows), 0, "quadratic", seed=0)
        assert np.allclose(score.per_sample_diffs, reference.per_sample_diffs, atol=1e-10)

    def test_shared_halves_null_feature(self, linear_split):
        train, test, _ = linear_split
        rows = np.arange(1000)
        score = loco_w(OLS, train, test, 1, "quadratic", seed=5,
                       train_halves=(rows, rows), test_halves=(rows, rows))
        assert abs(score.estimate) < 0.01

    def test_recovers_tsi(self):
        train, test, _ = train_test(20_000, BETA, seed=43)
        score = loco_w(OLS, train, test, 0, "quadratic", seed=6)
        assert score.estimate == pytest.approx(2.56, rel=0.1)
        assert score.n_test == test.n // 2

    def test_odd_test_set_drops_one_row(self, linear_split):
        train, test, _ = linear_split
        odd = test.take(np.arange(999))
        assert loco_w(OLS, train, odd, 0, "quadratic", seed=0).n_test == 499

    def test_unequal_test_halves(self, linear_split):
        train, test, _ = linear_split
        with pytest.raises(InvalidParameterError):
            loco_w(OLS, train, test, 0, "quadratic", seed=0,
                   test_halves=(np.arange(10), np.arange(10, 30)))

    def test_half_split(self):
        first, second = half_split(11, seed=3)
        assert first.size == second.size == 5
        assert not set(first) & set(second)
        with pytest.raises(InvalidParameterError):
            half_split(1, seed=0)


class TestScores:
    def test_estimate_is_mean_of_differences(self, linear_split):
        train, test, _ = linear_split
        model = fit(OLS, train.x, train.y, seed=0)
        sampler = fit_sampler(train.x, 2, OLS, seed=0)
        scores = [
            pfi(model, test, 2, "quadratic", seed=1),
            cpi(model, sampler, test, "quadratic", seed=1),
            sobol_cpi(model, sampler, test, 7, "quadratic", seed=1),
            loco(model, OLS, train, test, 2, "quadratic", seed=1),
            loco_w(OLS, train, test, 2, "quadratic", seed=1),
        ]
        for score in scores:
            assert score.estimate == pytest.approx(np.mean(score.per_sample_diffs), abs=1e-12)
            assert score.feature == "x2"

    def test_rejects_inconsistent_estimate(self):
        with pytest.raises(InvalidParameterError):
            ImportanceScore(0, "cpi", 1, 1.0, np.zeros(4), 4, 0)

    def test_rejects_wrong_length(self):
        with pytest.raises(InvalidParameterError):
            ImportanceScore(0, "cpi", 1, 0.0, np.zeros(4), 5, 0)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidParameterError):
            ImportanceScore(0, "loco", None, 0.0, np.array([np.nan, 0.0]), 2, 0)

    def test_rejects_unknown_estimator(self):
        with pytest.raises(InvalidParameterError):
            ImportanceScore(0, "shap", None, 0.0, np.zeros(2), 2, 0)

    def test_serialized_fields(self):
        score = ImportanceScore(3, "sobol_cpi", 10, 0.5, np.array([0.0, 1.0]), 2, 17)
        record = score.to_dict()
        assert record == {
            "feature": 3,
            "feature_name": "x3",
            "estimator": "sobol_cpi",
            "n_cal": 10,
            "estimate": 0.5,
            "n_test": 2,
            "seed": 17,
        }
        again = ImportanceScore.from_dict(score.to_dict(include_samples=True))
        assert np.array_equal(again.per_sample_diffs, score.per_sample_diffs)


def _null_linear(n, seed):
    ds, truth = gen_linear(n, 10, 0.6, 1.0, seed, beta_value=1.0, beta_dist="normal",
                           null_features=(0,))
    return split(ds, SplitSpec(0.5, derive_seed(seed, 9))) + (truth,)


@pytest.mark.slow
class TestDoubleRobustness:
    def test_broken_sampler_with_selecting_model(self):
        values = []
        for rep in range(50):
            train, test, _ = _null_linear(2000, derive_seed(501, rep))
            model = fit(LearnerSpec("lasso"), train.x, train.y, seed=rep)
            sampler = sampler_from_model(train.x, 0, constant_model(0.0, 9))
            values.append(sobol_cpi(model, sampler, test, 1, "quadratic", seed=rep).estimate)
        assert np.median(np.abs(values)) < 0.05

    def test_broken_model_with_valid_sampler(self):
        values = []
        for rep in range(50):
            train, test, truth = _null_linear(2000, derive_seed(502, rep))
            wrong = truth.beta + 0.3 * rng_from(rep).standard_normal(10)
            wrong[0] = 0.3
            sampler = fit_sampler(train.x, 0, OLS, seed=rep)
            score = sobol_cpi(fixed_linear_model(wrong), sampler, test, 1, "quadratic", seed=rep)
            values.append(score.estimate)
        assert np.median(np.abs(values)) < 0.05


@pytest.mark.slow
class TestConvergence:
    def test_rate_separation_on_null_feature(self):
        p, j, sizes = 10, 0, (50, 100, 200, 400, 800)
        beta = np.r_[0.0, np.ones(p - 1)]
        cov = toeplitz_covariance(p, 0.6)
        sobol_bias, loco_bias = [], []
        for n in sizes:
            sobol_values, loco_values = [], []
            for rep in range(1000):
                seed = derive_seed(77, n, rep)
                train, _ = make_linear(n, beta, seed=derive_seed(seed, 0))
                x_test = sample_gaussian(20_000, np.zeros(p), cov, derive_seed(seed, 1))
                y_test = x_test @ beta + rng_from(derive_seed(seed, 2)).standard_normal(20_000)
                test = Dataset(x_test, y_test)
                first, second = half_split(n, derive_seed(seed, 3))
                model = fit(OLS, train.x[first], train.y[first], seed=0)
                sampler = fit_sampler(train.x[second], j, OLS, seed=0)
                sobol_values.append(sobol_cpi(model, sampler, test, 1, "quadratic", seed).estimate)
                full = fit(OLS, train.x, train.y, seed=0)
                loco_values.append(loco(full, OLS, train, test, j, "quadratic", seed).estimate)
            sobol_bias.append(np.mean(sobol_values))
            loco_bias.append(np.mean(loco_values))
        assert log_log_slope(sizes, sobol_bias) <= -1.5
        assert -1.5 <= log_log_slope(sizes, loco_bias) <= -0.5

    def test_oracle_linear_setting(self):
        sobol_values, loco_values = [], []
        for rep in range(20):
            train, test, _ = train_test(10_000, BETA, seed=derive_seed(600, rep))
            model = fit(OLS, train.x, train.y, seed=0)
            sampler = fit_sampler(train.x, 0, OLS, seed=0)
            sobol_values.append(sobol_cpi(model, sampler, test, 100, "quadratic", rep).estimate)
            loco_values.append(loco(model, OLS, train, test, 0, "quadratic", rep).estimate)
        assert np.median(sobol_values) == pytest.approx(2.56, rel=0.1)
        assert np.median(loco_values) == pytest.approx(2.56, rel=0.1)

    def test_data_splitting_widens_spread(self):
        loco_values, split_values = [], []
        for rep in range(200):
            train, test, _ = train_test(500, BETA, seed=derive_seed(601, rep))
            model = fit(OLS, train.x, train.y, seed=0)
            loco_values.append(loco(model, OLS, train, test, 0, "quadratic", rep).estimate)
            split_values.append(loco_w(OLS, train, test, 0, "quadratic", rep).estimate)
        assert np.std(split_values) > 1.3 * np.std(loco_values)

    def test_small_sample_splitting_bias(self):
        beta = np.r_[0.0, np.ones(9)]
        loco_values, split_values = [], []
        for rep in range(2000):
            seed = derive_seed(603, rep)
            train, _ = make_linear(50, beta, seed=derive_seed(seed, 0))
            test, _ = make_linear(4000, beta, seed=derive_seed(seed, 1))
            full = fit(OLS, train.x, train.y, seed=0)
            loco_values.append(loco(full, OLS, train, test, 0, "quadratic", seed).estimate)
            split_values.append(loco_w(OLS, train, test, 0, "quadratic", seed).estimate)
        assert abs(np.mean(split_values)) > abs(np.mean(loco_values))

    def test_gated_interaction_with_tuned_boosting(self):
        boosting = LearnerSpec(
            "gradient_boosting", {"n_rounds": 500, "max_depth": 4, "min_samples_leaf": 5}
        )
        values = []
        for rep in range(10):
            ds, truth = gen_nonlinear(15_000, 10, 0.6, derive_seed(700, rep), oracle=False)
            train, test = ds.take(np.arange(10_000)), ds.take(np.arange(10_000, 15_000))
            model = fit(boosting, train.x, train.y, seed=rep)
            sampler = fit_sampler(train.x, 0, LearnerSpec("lasso"), seed=rep)
            values.append(sobol_cpi(model, sampler, test, 100, "quadratic", rep).estimate)
        assert np.median(values) == pytest.approx(0.32, rel=0.25)
