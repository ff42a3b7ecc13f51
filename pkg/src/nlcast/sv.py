"""Stochastic volatility sampling via the log-chi-squared Gaussian-mixture linearization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import geninvgauss

from .kalman import ffbs_ar1

# Ten-component normal mixture approximating the log chi^2_1 density
# (Omori, Chib, Shephard & Nakajima 2007 constants).
MIX_PROB = np.array([
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
    0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
])
MIX_MEAN = np.array([
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173,
    -1.97278, -3.46788, -5.55246, -8.68384, -14.65000,
])
MIX_VAR = np.array([
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
    0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
])

OFFSET = 1e-6  # keeps log(residual^2) finite at exact zeros

# priors: mu_h ~ N(0, 10); (rho_h + 1)/2 ~ Beta(25, 5); theta2_h ~ Gamma(1/2, rate 1/2)
MU_PRIOR_VAR = 10.0
RHO_BETA_A = 25.0
RHO_BETA_B = 5.0
TH2_GAMMA_SHAPE = 0.5
TH2_GAMMA_RATE = 0.5


@dataclass
class SvState:
    h: np.ndarray
    mu: float
    rho: float
    th2: float


def _draw_indicators(ystar: np.ndarray, h: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    dev = ystar[:, None] - h[:, None] - MIX_MEAN[None, :]
    logp = np.log(MIX_PROB)[None, :] - 0.5 * (np.log(MIX_VAR)[None, :] + dev * dev / MIX_VAR[None, :])
    logp -= logp.max(axis=1, keepdims=True)
    prob = np.exp(logp)
    prob /= prob.sum(axis=1, keepdims=True)
    u = rng.random(len(ystar))
    return (prob.cumsum(axis=1) < u[:, None]).sum(axis=1)


def _ar1_logpost(mu: float, rho: float, h: np.ndarray, th2: float) -> float:
    """Full conditional log density of (mu, rho), up to a constant."""
    if abs(rho) >= 1.0:
        return -np.inf
    e = h[1:] - mu - rho * h[:-1]
    ll = -0.5 * np.sum(e * e) / th2
    # stationary initial state
    m0 = mu / (1.0 - rho)
    v0 = th2 / (1.0 - rho * rho)
    ll += -0.5 * (np.log(v0) + (h[0] - m0) ** 2 / v0)
    ll += -0.5 * mu * mu / MU_PRIOR_VAR
    ll += (RHO_BETA_A - 1.0) * np.log((rho + 1.0) / 2.0) + (RHO_BETA_B - 1.0) * np.log((1.0 - rho) / 2.0)
    return ll


def _draw_mu_rho(h: np.ndarray, mu: float, rho: float, th2: float,
                 rng: np.random.Generator) -> tuple[float, float]:
    """Independence MH with the AR(1) least-squares conditional as proposal."""
    x = np.column_stack([np.ones(len(h) - 1), h[:-1]])
    y = h[1:]
    xtx = x.T @ x
    prec = xtx / th2
    prec[0, 0] += 1.0 / MU_PRIOR_VAR  # fold the Gaussian intercept prior into the proposal
    cov = np.linalg.inv(prec)
    mean = cov @ (x.T @ y / th2)
    chol = np.linalg.cholesky(cov)

    def q_logpdf(m, r):
        d = np.array([m, r]) - mean
        return -0.5 * d @ prec @ d

    for _ in range(10):
        prop = mean + chol @ rng.standard_normal(2)
        mu_p, rho_p = float(prop[0]), float(prop[1])
        if abs(rho_p) >= 1.0:
            continue
        log_acc = (_ar1_logpost(mu_p, rho_p, h, th2) - _ar1_logpost(mu, rho, h, th2)
                   + q_logpdf(mu, rho) - q_logpdf(mu_p, rho_p))
        if np.log(rng.random()) < log_acc:
            return mu_p, rho_p
        break
    return mu, rho


def _draw_th2(h: np.ndarray, mu: float, rho: float, rng: np.random.Generator) -> float:
    """Generalized-inverse-Gaussian conditional under the Gamma(1/2, 1/2) prior."""
    t = len(h)
    e = h[1:] - mu - rho * h[:-1]
    # GIG(p, a, b) conditional: density prop. to x^{p-1} exp(-(a x + b/x)/2)
    b = np.sum(e * e) + (1.0 - rho * rho) * (h[0] - mu / (1.0 - rho)) ** 2
    p = TH2_GAMMA_SHAPE - t / 2.0
    a = 2.0 * TH2_GAMMA_RATE
    scale = np.sqrt(max(b, 1e-300) / a)
    return float(geninvgauss.rvs(p, np.sqrt(a * max(b, 1e-300)), scale=scale, random_state=rng))


def draw_sv(residuals: np.ndarray, state: SvState, rng: np.random.Generator) -> SvState:
    """One Gibbs pass over the log-volatility path and its AR(1) parameters."""
    resid = np.asarray(residuals, dtype=float)
    if not np.all(np.isfinite(resid)):
        raise ValueError("non-finite residuals passed to the volatility step")
    ystar = np.log(resid * resid + OFFSET)
    ind = _draw_indicators(ystar, state.h, rng)
    obs = ystar - MIX_MEAN[ind]
    z = rng.standard_normal(len(obs))
    h = ffbs_ar1(obs, MIX_VAR[ind], state.mu, state.rho, state.th2, z)
    mu, rho = _draw_mu_rho(h, state.mu, state.rho, state.th2, rng)
    th2 = _draw_th2(h, mu, rho, rng)
    return SvState(h=h, mu=mu, rho=rho, th2=th2)


def init_sv(y: np.ndarray) -> SvState:
    h0 = float(np.log(max(np.var(y), 1e-8)))
    rho = 0.95
    return SvState(h=np.full(len(y), h0), mu=(1.0 - rho) * h0, rho=rho, th2=0.1)


def simulate_sv_path(t_len: int, mu: float, rho: float, th2: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Generative AR(1) log-volatility path starting from its stationary law."""
    h = np.empty(t_len)
    h[0] = mu / (1.0 - rho) + np.sqrt(th2 / (1.0 - rho ** 2)) * rng.standard_normal()
    for t in range(1, t_len):
        h[t] = mu + rho * h[t - 1] + np.sqrt(th2) * rng.standard_normal()
    return h
