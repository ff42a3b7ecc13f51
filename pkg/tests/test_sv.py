import numpy as np
import pytest
from scipy.special import digamma

from nlcast import sv


class TestMixtureConstants:
    def test_probabilities_sum_to_one(self):
        assert sv.MIX_PROB.sum() == pytest.approx(1.0, abs=1e-5)

    def test_matches_log_chi2_moments(self):
        # E[log chi2_1] = psi(1/2) + log 2, Var = pi^2 / 2
        mean = np.sum(sv.MIX_PROB * sv.MIX_MEAN)
        var = np.sum(sv.MIX_PROB * (sv.MIX_VAR + sv.MIX_MEAN ** 2)) - mean ** 2
        assert mean == pytest.approx(digamma(0.5) + np.log(2.0), abs=0.01)
        assert var == pytest.approx(np.pi ** 2 / 2.0, abs=0.05)


class TestIndicators:
    def test_valid_range_and_determinism(self):
        rng = np.random.default_rng(0)
        ystar = rng.normal(-1.3, 2.2, size=200)
        h = np.zeros(200)
        ind = sv._draw_indicators(ystar, h, np.random.default_rng(1))
        assert ind.min() >= 0 and ind.max() <= 9
        ind2 = sv._draw_indicators(ystar, h, np.random.default_rng(1))
        np.testing.assert_array_equal(ind, ind2)

    def test_extreme_observation_prefers_matching_component(self):
        # ystar far below: component 9 (mean -14.65) dominates
        ystar = np.full(50, -14.0)
        ind = sv._draw_indicators(ystar, np.zeros(50), np.random.default_rng(2))
        assert np.all(ind >= 8)


class TestParamConditionals:
    def test_mu_rho_recovered_from_long_path(self):
        mu, rho, th2 = 0.2, 0.9, 0.3
        rng = np.random.default_rng(3)
        h = sv.simulate_sv_path(4000, mu, rho, th2, rng)
        mus, rhos = [], []
        cur = (0.0, 0.5)
        for _ in range(400):
            cur = sv._draw_mu_rho(h, cur[0], cur[1], th2, rng)
            mus.append(cur[0])
            rhos.append(cur[1])
        assert abs(np.mean(mus[100:]) - mu) < 0.1
        assert abs(np.mean(rhos[100:]) - rho) < 0.03

    def test_th2_concentrates_on_truth(self):
        mu, rho, th2 = 0.0, 0.8, 0.3
        rng = np.random.default_rng(4)
        h = sv.simulate_sv_path(3000, mu, rho, th2, rng)
        draws = [sv._draw_th2(h, mu, rho, rng) for _ in range(300)]
        assert abs(np.mean(draws) - th2) < 0.05
        assert np.all(np.array(draws) > 0)

    def test_rho_stays_stationary(self):
        rng = np.random.default_rng(5)
        h = sv.simulate_sv_path(500, 0.0, 0.97, 0.1, rng)
        cur = (0.0, 0.9)
        for _ in range(200):
            cur = sv._draw_mu_rho(h, cur[0], cur[1], 0.1, rng)
            assert abs(cur[1]) < 1.0

    def test_ar1_logpost_rejects_nonstationary(self):
        assert sv._ar1_logpost(0.0, 1.0, np.zeros(10), 0.1) == -np.inf
        assert sv._ar1_logpost(0.0, -1.2, np.zeros(10), 0.1) == -np.inf


class TestGibbsPass:
    def test_constant_volatility_recovery(self):
        sigma = 0.5
        rng = np.random.default_rng(6)
        resid = sigma * rng.standard_normal(400)
        state = sv.init_sv(resid)
        keep = []
        for it in range(600):
            state = sv.draw_sv(resid, state, rng)
            if it >= 200:
                keep.append(np.exp(state.h / 2.0))
        vol = np.mean(keep, axis=0)
        frac = np.mean(np.abs(vol - sigma) / sigma < 0.25)
        assert frac > 0.8

    def test_path_tracks_true_volatility(self):
        rng = np.random.default_rng(7)
        h_true = sv.simulate_sv_path(400, -0.1, 0.95, 0.15, rng)
        resid = np.exp(h_true / 2.0) * rng.standard_normal(400)
        state = sv.init_sv(resid)
        keep = []
        for it in range(800):
            state = sv.draw_sv(resid, state, rng)
            if it >= 300:
                keep.append(state.h)
        corr = np.corrcoef(np.mean(keep, axis=0), h_true)[0, 1]
        assert corr > 0.6

    def test_zero_residuals_stay_finite(self):
        rng = np.random.default_rng(8)
        resid = np.zeros(50)
        state = sv.init_sv(np.full(50, 0.1))
        for _ in range(5):
            state = sv.draw_sv(resid, state, rng)
        assert np.all(np.isfinite(state.h))
        assert np.isfinite(state.th2) and state.th2 > 0

    def test_nonfinite_residuals_rejected(self):
        state = sv.init_sv(np.ones(10))
        with pytest.raises(ValueError):
            sv.draw_sv(np.array([1.0, np.nan] + [0.5] * 8), state, np.random.default_rng(0))


class TestSimulatePath:
    def test_stationary_moments(self):
        mu, rho, th2 = 0.5, 0.7, 0.2
        h = sv.simulate_sv_path(50_000, mu, rho, th2, np.random.default_rng(9))
        assert abs(h.mean() - mu / (1 - rho)) < 0.03
        assert abs(h.var() - th2 / (1 - rho ** 2)) < 0.02
