import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catelab.dgp import GaussianPairParams, LinearInteractionModel, PropensitySpec, generate_dataset, true_cate
from catelab.errors import EstimationError, SingularFitError, UnsupportedModelError
from catelab.estimators import (
    FitResult,
    decompose_naive_bias,
    fit_working_model,
    naive_difference_in_means,
    predict_cate,
)
from catelab.seeding import make_rng

from conftest import make_dataset
from oracles import normal_equations_fit, rss

DEMO = LinearInteractionModel.demo()


def _random_design(seed, n=300):
    rng = make_rng(seed)
    x = rng.normal(0.3, 1.5, n)
    a = (rng.random(n) < 0.4).astype(float)
    y = 1.0 - 2.0 * a + 0.7 * x + 1.3 * a * x + rng.standard_normal(n)
    return x, a, y


class TestFit:
    def test_exact_interpolation(self, rng):
        x = rng.standard_normal(50)
        a = np.tile([0, 1], 25)
        fit = fit_working_model(make_dataset(x, a, 2.0 + 3.0 * a))
        assert np.allclose(fit.coefficients, (2.0, 3.0, 0.0, 0.0), atol=1e-10, rtol=0)
        assert fit.n_used == 50
        assert fit.residual_variance == pytest.approx(0.0, abs=1e-20)

    def test_demo_model_without_z(self):
        model = LinearInteractionModel.demo(noise_sd=0.0)
        ds = generate_dataset(model, GaussianPairParams(sigma_z=1e-3, rho=0.0), PropensitySpec(), 400, seed=3)
        # Remove z from the outcome: y = 3 + a + a*x exactly.
        y = 3.0 + ds.a + ds.a * ds.x
        fit = fit_working_model(make_dataset(ds.x, ds.a, y))
        oracle = normal_equations_fit(ds.a, ds.x, y)
        assert np.allclose(fit.coefficients, (3.0, 1.0, 0.0, 1.0), atol=1e-10, rtol=0)
        assert np.allclose(oracle, (3.0, 1.0, 0.0, 1.0), atol=1e-10, rtol=0)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_normal_equations(self, seed):
        x, a, y = _random_design(seed)
        fit = fit_working_model(make_dataset(x, a, y))
        assert np.allclose(fit.coefficients, normal_equations_fit(a, x, y), atol=1e-8, rtol=0)
        assert fit.rss == pytest.approx(rss(fit.coefficients, a, x, y), rel=1e-12)
        assert fit.residual_variance == pytest.approx(fit.rss / (len(x) - 4))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32), which=st.integers(0, 3), sign=st.sampled_from([-1.0, 1.0]))
    def test_least_squares_optimality(self, seed, which, sign):
        x, a, y = _random_design(seed, n=60)
        fit = fit_working_model(make_dataset(x, a, y))
        perturbed = np.array(fit.coefficients)
        perturbed[which] += sign * 1e-3
        assert rss(perturbed, a, x, y) >= rss(fit.coefficients, a, x, y)

    @pytest.mark.parametrize("c", [-7.5, 0.25, 1e3])
    def test_shift_invariance(self, c):
        x, a, y = _random_design(4)
        base = fit_working_model(make_dataset(x, a, y)).coefficients
        shifted = fit_working_model(make_dataset(x, a, y + c)).coefficients
        assert shifted[0] == pytest.approx(base[0] + c, abs=1e-9)
        for k in (1, 2, 3):
            assert shifted[k] == pytest.approx(base[k], abs=1e-10)

    @pytest.mark.parametrize("arm", [0, 1])
    def test_single_arm_is_singular(self, arm, rng):
        x = rng.standard_normal(20)
        with pytest.raises(SingularFitError) as err:
            fit_working_model(make_dataset(x, np.full(20, arm), x))
        assert err.value.column == "a"

    def test_constant_x_is_singular(self):
        a = np.tile([0, 1], 10)
        with pytest.raises(SingularFitError) as err:
            fit_working_model(make_dataset(np.full(20, 2.0), a, a * 1.0))
        assert err.value.column == "x"

    def test_x_constant_within_treated_is_singular(self, rng):
        a = np.tile([0, 1], 10)
        x = np.where(a == 1, 1.5, rng.standard_normal(20))
        with pytest.raises(SingularFitError) as err:
            fit_working_model(make_dataset(x, a, x))
        assert err.value.column == "a*x"

    def test_too_few_units(self):
        with pytest.raises(EstimationError):
            fit_working_model(make_dataset([0.0, 1.0, 2.0, 3.0], [0, 1, 0, 1], [1.0, 2.0, 3.0, 4.0]))

    def test_consistency_under_ignorability(self):
        # MSE of the estimated CATE against the truth shrinks as n grows.
        params = GaussianPairParams.demo(0.7)
        averages = []
        for n in (500, 5000, 50000):
            mses = []
            for seed in range(8):
                ds = generate_dataset(DEMO, params, PropensitySpec.ignorable(), n, seed=1000 + seed)
                fit = fit_working_model(ds)
                mses.append(np.mean((predict_cate(fit, ds.x) - true_cate(DEMO, params, ds.x)) ** 2))
            averages.append(np.mean(mses))
        assert averages[0] >= averages[1] >= averages[2]


class TestPredict:
    @pytest.mark.parametrize("coef,x,expected", [
        ((9.0, 1.0, 9.0, 0.0), 123.0, 1.0),
        ((0.0, 1.0, 0.0, 3.1), 1.0, 4.1),
        ((5.0, 0.0, 5.0, -2.0), -0.5, 1.0),
    ])
    def test_linear_evaluation(self, coef, x, expected):
        assert predict_cate(FitResult(coef, 0.0, 10), x) == pytest.approx(expected, abs=1e-15)

    def test_vectorized(self):
        fit = FitResult((0.0, 1.0, 0.0, 2.0), 0.0, 10)
        assert np.allclose(predict_cate(fit, np.array([0.0, 1.0])), [1.0, 3.0])


class TestNaive:
    def test_constant_outcome(self):
        assert naive_difference_in_means(make_dataset([0, 1, 2, 3], [0, 1, 0, 1], [4.0] * 4)) == 0.0

    def test_two_points(self):
        assert naive_difference_in_means(make_dataset([0, 0], [1, 0], [5.0, 2.0])) == 3.0

    def test_empty_arm(self):
        with pytest.raises(EstimationError):
            naive_difference_in_means(make_dataset([0, 1], [1, 1], [1.0, 2.0]))

    def test_confounded_naive_matches_imbalance_formula(self):
        model = LinearInteractionModel(beta0=1.0, beta1=2.0, beta2=1.5, beta3=-0.8, noise_sd=1.0)
        ds = generate_dataset(model, GaussianPairParams.demo(0.5), PropensitySpec.confounded(),
                              500_000, seed=17)
        t = ds.a == 1
        dx = ds.x[t].mean() - ds.x[~t].mean()
        dz = ds.z[t].mean() - ds.z[~t].mean()
        expected = model.beta1 + model.beta2 * dx + model.beta3 * dz
        se = model.noise_sd * np.sqrt(1 / t.sum() + 1 / (~t).sum())
        naive = naive_difference_in_means(ds)
        assert abs(naive - expected) < 4 * se
        assert abs(naive - model.beta1) > 0.5


class TestDecomposition:
    def test_randomized_balance(self):
        model = LinearInteractionModel(beta0=1.0, beta1=2.0, beta2=1.5, beta3=-0.8)
        ds = generate_dataset(model, GaussianPairParams.demo(0.5), PropensitySpec.constant(0.5),
                              1_000_000, seed=5)
        dec = decompose_naive_bias(ds, model)
        assert abs(dec.x_imbalance_term) < 0.01
        assert abs(dec.z_imbalance_term) < 0.02
        assert dec.structural_effect == 2.0

    def test_confounded_z_term_is_large(self):
        model = LinearInteractionModel(beta0=1.0, beta1=2.0, beta2=0.0, beta3=1.0)
        ds = generate_dataset(model, GaussianPairParams.demo(0.5), PropensitySpec.confounded(),
                              100_000, seed=6)
        assert abs(decompose_naive_bias(ds, model).z_imbalance_term) > 1.0

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32),
           betas=st.tuples(*[st.floats(-5, 5) for _ in range(4)]),
           noise=st.floats(0, 3),
           kind=st.sampled_from(["ignorable-logistic", "confounded-logistic", "constant"]))
    def test_terms_sum_to_naive(self, seed, betas, noise, kind):
        model = LinearInteractionModel(*betas, 0.0, 0.0, noise)
        ds = generate_dataset(model, GaussianPairParams.demo(0.3), PropensitySpec(kind, 0.5), 400, seed)
        dec = decompose_naive_bias(ds, model)
        assert dec.total() == pytest.approx(dec.naive_contrast, abs=1e-12)

    def test_interactions_unsupported(self):
        ds = generate_dataset(DEMO, GaussianPairParams(), PropensitySpec(), 50, seed=1)
        with pytest.raises(UnsupportedModelError):
            decompose_naive_bias(ds, DEMO)
