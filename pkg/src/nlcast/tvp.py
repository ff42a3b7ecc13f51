"""Bayesian TVP regression with stochastic volatility and shrinkage priors.

Non-centered form: y_t = d_t' b0 + d_t' diag(sqrt_v) bt_t + e_t with bt a
unit-innovation random walk started at zero, so (b0, sqrt_v) stack into one
Gaussian regression draw and the state step is plain FFBS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .kalman import ffbs_tvp
from .sv import SvState, draw_sv, init_sv


class SamplerError(RuntimeError):
    pass


@dataclass
class McmcBudget:
    draws: int = 10_000
    burn: int = 2_000
    thin: int = 1

    def __post_init__(self):
        if not self.draws > self.burn >= 0:
            raise ValueError("need draws > burn >= 0")

    @property
    def retained(self) -> int:
        return (self.draws - self.burn) // self.thin


@dataclass
class ModelSpec:
    tvp: bool
    prior: str  # "HS" or "SSVS"
    mcmc: McmcBudget = field(default_factory=McmcBudget)
    seed: int = 0
    store_paths: bool = False

    def __post_init__(self):
        if self.prior not in ("HS", "SSVS"):
            raise ValueError(f"unknown prior {self.prior!r}")


@dataclass
class HorseshoeState:
    zeta2: np.ndarray   # local scales squared
    sigma2: float       # global scale squared
    eta: np.ndarray     # local auxiliaries
    phi: float          # global auxiliary

    @classmethod
    def init(cls, n: int) -> "HorseshoeState":
        return cls(zeta2=np.ones(n), sigma2=1.0, eta=np.ones(n), phi=1.0)

    @property
    def tau2(self) -> np.ndarray:
        return np.maximum(self.zeta2 * self.sigma2, 1e-300)


@dataclass
class SsvsState:
    gamma: np.ndarray   # binary inclusion indicators
    tau0: np.ndarray    # spike standard deviations
    tau1: np.ndarray    # slab standard deviations
    p_incl: float = 0.5

    @classmethod
    def init(cls, sigma_hat: np.ndarray) -> "SsvsState":
        return cls(
            gamma=np.ones(len(sigma_hat), dtype=int),
            tau0=np.sqrt(0.01 * sigma_hat),
            tau1=np.sqrt(100.0 * sigma_hat),
        )

    @property
    def tau2(self) -> np.ndarray:
        return np.where(self.gamma == 1, self.tau1 ** 2, self.tau0 ** 2)


@dataclass
class PosteriorDraws:
    beta0: np.ndarray        # S x M
    sqrt_v: np.ndarray       # S x M (zero in constant-parameter mode)
    beta_tilde_T: np.ndarray  # S x M, last normalized state
    h_T: np.ndarray          # S, last log-volatility
    mu_h: np.ndarray
    rho_h: np.ndarray
    theta2_h: np.ndarray
    beta_tilde_paths: np.ndarray | None = None  # S x T x M when stored
    h_paths: np.ndarray | None = None           # S x T when stored

    @property
    def S(self) -> int:
        return self.beta0.shape[0]


def draw_alpha(y: np.ndarray, design: np.ndarray, sig2: np.ndarray,
               tau2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Joint Gaussian draw of the stacked coefficient vector under a diagonal prior."""
    w = 1.0 / np.sqrt(sig2)
    dz = design * w[:, None]
    yz = y * w
    prec = dz.T @ dz + np.diag(1.0 / tau2)
    try:
        c = sla.cholesky(prec, lower=True)
    except sla.LinAlgError as exc:
        raise SamplerError("non-positive-definite posterior precision") from exc
    mean = sla.cho_solve((c, True), dz.T @ yz)
    z = rng.standard_normal(len(mean))
    return mean + sla.solve_triangular(c, z, lower=True, trans="T")


def draw_ssvs(alpha: np.ndarray, state: SsvsState, rng: np.random.Generator) -> SsvsState:
    """Bernoulli indicator update, log-space likelihood ratio."""
    b2 = alpha * alpha
    log_u1 = -np.log(state.tau1) - b2 / (2.0 * state.tau1 ** 2) + np.log(state.p_incl)
    log_u0 = -np.log(state.tau0) - b2 / (2.0 * state.tau0 ** 2) + np.log(1.0 - state.p_incl)
    prob = 1.0 / (1.0 + np.exp(np.clip(log_u0 - log_u1, -700, 700)))
    gamma = (rng.random(len(alpha)) < prob).astype(int)
    return SsvsState(gamma=gamma, tau0=state.tau0, tau1=state.tau1, p_incl=state.p_incl)


def ssvs_inclusion_prob(alpha: np.ndarray, state: SsvsState) -> np.ndarray:
    b2 = alpha * alpha
    log_u1 = -np.log(state.tau1) - b2 / (2.0 * state.tau1 ** 2) + np.log(state.p_incl)
    log_u0 = -np.log(state.tau0) - b2 / (2.0 * state.tau0 ** 2) + np.log(1.0 - state.p_incl)
    return 1.0 / (1.0 + np.exp(np.clip(log_u0 - log_u1, -700, 700)))


def _inv_gamma(shape: float, scale, rng: np.random.Generator):
    return np.maximum(scale / rng.gamma(shape, 1.0, size=np.shape(scale) or None), 1e-300)


def draw_horseshoe(alpha: np.ndarray, state: HorseshoeState,
                   rng: np.random.Generator) -> HorseshoeState:
    """Inverse-gamma conditionals of the half-Cauchy hierarchy."""
    b2 = alpha * alpha
    zeta2 = _inv_gamma(1.0, 1.0 / state.eta + b2 / (2.0 * state.sigma2), rng)
    n = len(alpha)
    sigma2 = float(_inv_gamma((n + 1) / 2.0, 1.0 / state.phi + 0.5 * np.sum(b2 / zeta2), rng))
    eta = _inv_gamma(1.0, 1.0 + 1.0 / zeta2, rng)
    phi = float(_inv_gamma(1.0, 1.0 + 1.0 / sigma2, rng))
    return HorseshoeState(zeta2=zeta2, sigma2=sigma2, eta=eta, phi=phi)


def ols_coef_scale(y: np.ndarray, d: np.ndarray, ridge: float = 1e-6) -> np.ndarray:
    """Per-coefficient standard deviation from a ridge-stabilized constant fit."""
    t, m = d.shape
    g = d.T @ d + ridge * np.eye(m)
    ginv = sla.inv(g)
    beta = ginv @ (d.T @ y)
    dof = max(t - m, 1)
    s2 = float(np.sum((y - d @ beta) ** 2) / dof)
    var = np.maximum(s2 * np.diag(ginv), 1e-12)
    return np.sqrt(var)


def run_mcmc(y: np.ndarray, d: np.ndarray, spec: ModelSpec) -> PosteriorDraws:
    """Gibbs sampler over (alpha, state path, volatilities, prior scales)."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    t_len, m = d.shape
    if len(y) != t_len:
        raise ValueError("target and design length mismatch")
    rng = np.random.default_rng(spec.seed)

    n_coef = 2 * m if spec.tvp else m
    sigma_hat = ols_coef_scale(y, d)
    if spec.prior == "HS":
        prior_state: HorseshoeState | SsvsState = HorseshoeState.init(n_coef)
    else:
        sh = np.concatenate([sigma_hat, sigma_hat]) if spec.tvp else sigma_hat
        prior_state = SsvsState.init(sh)

    beta_tilde = np.zeros((t_len, m))
    sv = init_sv(y)
    beta0 = np.zeros(m)
    sqrt_v = np.zeros(m)

    budget = spec.mcmc
    n_ret = budget.retained
    out = PosteriorDraws(
        beta0=np.empty((n_ret, m)),
        sqrt_v=np.zeros((n_ret, m)),
        beta_tilde_T=np.zeros((n_ret, m)),
        h_T=np.empty(n_ret),
        mu_h=np.empty(n_ret),
        rho_h=np.empty(n_ret),
        theta2_h=np.empty(n_ret),
        beta_tilde_paths=np.zeros((n_ret, t_len, m)) if spec.store_paths else None,
        h_paths=np.empty((n_ret, t_len)) if spec.store_paths else None,
    )

    kept = 0
    for it in range(budget.draws):
        sig2 = np.exp(sv.h)

        # step 1: stacked coefficient draw
        if spec.tvp:
            design = np.concatenate([d, beta_tilde * d], axis=1)
        else:
            design = d
        alpha = draw_alpha(y, design, sig2, prior_state.tau2, rng)
        beta0 = alpha[:m]
        sqrt_v = alpha[m:] if spec.tvp else np.zeros(m)

        # step 2: FFBS for the normalized state path (skipped in constant mode)
        if spec.tvp:
            yc = y - d @ beta0
            beta_tilde, _ = ffbs_tvp(yc, d * sqrt_v[None, :], sig2, rng)

        # step 3: stochastic volatility
        resid = y - d @ beta0
        if spec.tvp:
            resid = resid - np.sum(d * sqrt_v[None, :] * beta_tilde, axis=1)
        sv = draw_sv(resid, sv, rng)

        # step 4: shrinkage scales
        if spec.prior == "HS":
            prior_state = draw_horseshoe(alpha, prior_state, rng)
        else:
            prior_state = draw_ssvs(alpha, prior_state, rng)

        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(sv.h))):
            raise SamplerError(f"non-finite draw at iteration {it}")

        if it >= budget.burn and (it - budget.burn) % budget.thin == 0 and kept < n_ret:
            out.beta0[kept] = beta0
            out.sqrt_v[kept] = sqrt_v
            out.beta_tilde_T[kept] = beta_tilde[-1] if spec.tvp else 0.0
            out.h_T[kept] = sv.h[-1]
            out.mu_h[kept] = sv.mu
            out.rho_h[kept] = sv.rho
            out.theta2_h[kept] = sv.th2
            if spec.store_paths:
                out.beta_tilde_paths[kept] = beta_tilde if spec.tvp else 0.0
                out.h_paths[kept] = sv.h
            kept += 1
    return out


def reconstruct_beta(draws: PosteriorDraws, which: int) -> np.ndarray:
    """beta_T for one retained draw: beta0 + sqrt_v * beta_tilde_T."""
    return draws.beta0[which] + draws.sqrt_v[which] * draws.beta_tilde_T[which]


def save_draws_csv(draws: PosteriorDraws, path) -> None:
    """Flat audit dump: draw index, parameter name, value."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw", "parameter", "value"])
        m = draws.beta0.shape[1]
        for s in range(draws.S):
            for j in range(m):
                w.writerow([s, f"beta0[{j}]", repr(float(draws.beta0[s, j]))])
                w.writerow([s, f"sqrt_v[{j}]", repr(float(draws.sqrt_v[s, j]))])
            w.writerow([s, "h_T", repr(float(draws.h_T[s]))])
            w.writerow([s, "mu_h", repr(float(draws.mu_h[s]))])
            w.writerow([s, "rho_h", repr(float(draws.rho_h[s]))])
            w.writerow([s, "theta2_h", repr(float(draws.theta2_h[s]))])
