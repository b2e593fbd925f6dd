import numpy as np
import pytest
from scipy import optimize, stats

from blindcite import (
    ConfigError,
    DesignMatrix,
    FittedNegBinModel,
    NumericalError,
    ValidationError,
    fit_negbin,
    interpret_nb_coefficient,
    nb_nll,
    nb_nll_gradient,
    predict_nb,
)
from blindcite.errors import ShapeError


def make_dm(x, y, names=None):
    names = names or tuple(f"c{i}" for i in range(x.shape[1]))
    return DesignMatrix(
        x=x, y=y, column_names=tuple(names), response_kind="citation_count"
    )


def nb_counts(rng, eta, psi):
    lam = rng.gamma(shape=psi, scale=np.exp(eta) / psi)
    return rng.poisson(lam).astype(np.float64)


class TestNbNll:
    def test_zero_count_unit_mean_matches_geometric(self):
        # psi = 1 makes the distribution geometric: P(0) = psi / (psi + mu) = 1/2
        assert nb_nll([0], [1.0], 1.0) == pytest.approx(np.log(2.0), rel=1e-12)

    def test_large_psi_approaches_poisson(self):
        y = np.array([4.0])
        mu = np.array([2.5])
        poisson_nll = -stats.poisson.logpmf(4, 2.5)
        assert nb_nll(y, mu, 1e8) == pytest.approx(poisson_nll, abs=1e-4)

    def test_matches_independent_pmf_oracle(self):
        y = np.array([3.0, 1.0])
        mu = np.array([2.0, 2.0])
        psi = 0.803
        oracle = -np.sum(stats.nbinom.logpmf(y, n=psi, p=psi / (psi + mu)))
        assert nb_nll(y, mu, psi) == pytest.approx(oracle, abs=1e-10)

    def test_large_counts_do_not_overflow(self):
        value = nb_nll([10**6], [10.0**6], 0.7)
        assert np.isfinite(value)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            nb_nll([0], [0.0], 1.0)
        with pytest.raises(ValidationError):
            nb_nll([0], [1.0], 0.0)
        with pytest.raises(ValidationError):
            nb_nll([-1], [1.0], 1.0)
        with pytest.raises(ValidationError):
            nb_nll([0.5], [1.0], 1.0)


def central_difference(f, theta, eps=1e-6):
    grad = np.zeros_like(theta)
    for j in range(theta.size):
        up = theta.copy()
        down = theta.copy()
        up[j] += eps
        down[j] -= eps
        grad[j] = (f(up) - f(down)) / (2.0 * eps)
    return grad


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(12)
        n, p = 40, 3
        x = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
        y = nb_counts(rng, 0.5 + 0.4 * x[:, 1], 0.9)
        for _ in range(20):
            alpha = rng.normal(0, 0.4, p)
            log_psi = rng.normal(0, 0.7)
            grad = nb_nll_gradient(x, y, alpha, np.exp(log_psi))
            theta = np.concatenate([alpha, [log_psi]])

            def f(t):
                return nb_nll(y, np.exp(x @ t[:p]), np.exp(t[p]))

            fd = central_difference(f, theta)
            np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-9)


class TestFitNegbin:
    def test_intercept_only_recovers_log_mean(self):
        rng = np.random.default_rng(6)
        y = nb_counts(rng, np.full(400, 1.2), 0.8)
        dm = make_dm(np.ones((400, 1)), y, names=("intercept",))
        model = fit_negbin(dm)
        assert model.alpha[0] == pytest.approx(np.log(y.mean()), abs=1e-6)

    def test_matches_grid_polish_oracle_on_small_problem(self):
        rng = np.random.default_rng(77)
        n = 30
        x = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = nb_counts(rng, 1.0 + 0.5 * x[:, 1], 1.3)
        model = fit_negbin(make_dm(x, y))

        # independent maximizer: dense psi grid, BFGS for alpha, joint polish
        def nll_at(theta):
            return nb_nll(y, np.exp(x @ theta[:2]), np.exp(theta[2]))

        best = None
        for log_psi in np.linspace(-2.5, 3.5, 40):
            res = optimize.minimize(
                lambda a: nb_nll(y, np.exp(x @ a), np.exp(log_psi)),
                x0=np.zeros(2),
                method="BFGS",
            )
            candidate = np.array([*res.x, log_psi])
            if best is None or nll_at(candidate) < nll_at(best):
                best = candidate
        polish = optimize.minimize(nll_at, x0=best, method="Nelder-Mead",
                                   options={"xatol": 1e-8, "fatol": 1e-10})
        oracle_ll = -nll_at(polish.x)
        assert model.log_lik == pytest.approx(oracle_ll, abs=1e-4)
        assert model.log_lik >= oracle_ll - 1e-4

    def test_recovery_moderate_scale(self):
        rng = np.random.default_rng(15)
        n = 8000
        x = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
        alpha_true = np.array([0.9, 0.6, -0.2])
        y = nb_counts(rng, x @ alpha_true, 0.7)
        model = fit_negbin(make_dm(x, y))
        assert model.converged
        np.testing.assert_allclose(model.alpha, alpha_true, atol=0.08)
        assert model.psi == pytest.approx(0.7, abs=0.08)

    def test_loglik_monotone_across_outer_iterations(self):
        rng = np.random.default_rng(25)
        n = 500
        x = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = nb_counts(rng, 0.8 + 0.5 * x[:, 1], 0.6)
        model = fit_negbin(make_dm(x, y))
        path = np.array(model.ll_path)
        assert np.all(np.diff(path) >= -1e-10)

    def test_poisson_data_drives_psi_large(self):
        rng = np.random.default_rng(33)
        n = 50_000
        y = rng.poisson(5.0, n).astype(np.float64)
        x = np.column_stack([np.ones(n), rng.normal(size=n)])
        model = fit_negbin(make_dm(x, y))
        assert model.psi > 1e3

    def test_constant_shift_moves_only_intercept(self):
        rng = np.random.default_rng(9)
        n = 2000
        x = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = nb_counts(rng, 0.7 + 0.5 * x[:, 1], 0.8)
        base = fit_negbin(make_dm(x, y))
        shifted = x.copy()
        shifted[:, 1] += 3.0
        model = fit_negbin(make_dm(shifted, y))
        assert model.alpha[1] == pytest.approx(base.alpha[1], abs=1e-6)
        assert model.alpha[0] == pytest.approx(base.alpha[0] - 3.0 * base.alpha[1], abs=1e-6)
        np.testing.assert_allclose(
            predict_nb(model, shifted), predict_nb(base, x), rtol=1e-8
        )

    def test_adding_true_predictor_improves_deviance(self):
        rng = np.random.default_rng(50)
        n = 3000
        x_full = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = nb_counts(rng, 0.5 + 0.8 * x_full[:, 1], 0.9)
        small = fit_negbin(make_dm(x_full[:, :1], y, names=("intercept",)))
        full = fit_negbin(make_dm(x_full, y))
        assert full.log_lik > small.log_lik

    def test_all_zero_response_rejected(self):
        x = np.column_stack([np.ones(20), np.arange(20.0)])
        with pytest.raises(NumericalError):
            fit_negbin(make_dm(x, np.zeros(20)))

    def test_wrong_response_kind_rejected(self):
        x = np.ones((20, 1))
        dm = DesignMatrix(
            x=x, y=np.ones(20), column_names=("intercept",), response_kind="weighted_sjr"
        )
        with pytest.raises(ConfigError):
            fit_negbin(dm)

    def test_too_few_rows_rejected(self):
        x = np.column_stack([np.ones(3), np.arange(3.0)])
        with pytest.raises(NumericalError):
            fit_negbin(make_dm(x, np.array([1.0, 2.0, 3.0])))


class TestPredictNb:
    def _toy_model(self, alpha, names):
        p = len(alpha)
        return FittedNegBinModel(
            alpha=np.asarray(alpha, dtype=np.float64),
            psi=0.667,
            log_lik=0.0,
            std_errors=np.ones(p),
            z_stats=np.ones(p),
            p_values=np.zeros(p),
            psi_std_error=0.01,
            n=100,
            converged=True,
            iterations=3,
            column_names=names,
        )

    def test_intercept_only(self):
        model = self._toy_model([0.7], ("intercept",))
        assert predict_nb(model, np.array([[1.0]]))[0] == pytest.approx(np.exp(0.7))

    def test_published_constant(self):
        # constant 0.966 from the count-model fit: exp(0.966) = 2.627...
        model = self._toy_model([0.966, 0.63], ("intercept", "References"))
        nu = predict_nb(model, np.array([[1.0, 0.0]]))[0]
        assert nu == pytest.approx(np.exp(0.966), rel=1e-12)
        assert nu == pytest.approx(2.627, abs=5e-4)

    def test_zero_linear_predictor(self):
        model = self._toy_model([0.5, -0.5], ("intercept", "x"))
        assert predict_nb(model, np.array([[1.0, 1.0]]))[0] == pytest.approx(1.0)

    def test_column_mismatch_rejected(self):
        model = self._toy_model([0.5], ("intercept",))
        with pytest.raises(ShapeError):
            predict_nb(model, np.ones((2, 3)))


class TestInterpretNbCoefficient:
    def test_published_references_effect(self):
        assert interpret_nb_coefficient(0.630) == pytest.approx(87.76106, abs=1e-3)

    def test_null_effect(self):
        assert interpret_nb_coefficient(0.0) == 0.0

    def test_strong_negative_effect(self):
        oracle = 100.0 * (np.exp(-1.966) - 1.0)
        assert interpret_nb_coefficient(-1.966) == pytest.approx(oracle, rel=1e-12)
        assert interpret_nb_coefficient(-1.966) == pytest.approx(-86.0, abs=0.05)
