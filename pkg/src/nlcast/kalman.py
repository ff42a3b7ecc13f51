"""Forward-filtering backward-sampling kernels for the state-space blocks."""

from __future__ import annotations

import numpy as np
from numba import njit

LOG2PI = float(np.log(2.0 * np.pi))


@njit(cache=True)
def filter_tvp(yc, f, sig2):
    """Kalman filter for a random-walk state with scalar observations.

    Observation: yc_t = f_t' b_t + e_t, e_t ~ N(0, sig2_t)
    State:       b_t = b_{t-1} + w_t, w_t ~ N(0, I), b_0 = 0.
    Returns filtered means (T x M), covariances (T x M x M) and the log-likelihood.
    """
    t_len, m = f.shape
    a = np.zeros(m)
    p = np.zeros((m, m))
    eye = np.eye(m)
    means = np.empty((t_len, m))
    covs = np.empty((t_len, m, m))
    ll = 0.0
    for t in range(t_len):
        pp = p + eye
        ft = f[t]
        pf = pp @ ft
        s = ft @ pf + sig2[t]
        v = yc[t] - ft @ a
        ll += -0.5 * (LOG2PI + np.log(s) + v * v / s)
        k = pf / s
        a = a + k * v
        p = pp - np.outer(k, pf)
        p = 0.5 * (p + p.T)
        means[t] = a
        covs[t] = p
    return means, covs, ll


@njit(cache=True)
def sample_tvp_path(means, covs, z):
    """Backward sampling for the unit-innovation random-walk state.

    `z` holds T x M standard normal draws; returns one joint state path.
    """
    t_len, m = means.shape
    path = np.empty((t_len, m))
    eye = np.eye(m)
    c = _safe_chol(covs[t_len - 1])
    path[t_len - 1] = means[t_len - 1] + c @ z[t_len - 1]
    for t in range(t_len - 2, -1, -1):
        p = covs[t]
        gain = np.linalg.solve(p + eye, p).T  # P (P + I)^{-1}
        mean = means[t] + gain @ (path[t + 1] - means[t])
        cov = p - gain @ p
        cov = 0.5 * (cov + cov.T)
        c = _safe_chol(cov)
        path[t] = mean + c @ z[t]
    return path


@njit(cache=True)
def _chol_attempt(a, out):
    """Manual lower Cholesky; returns False instead of raising on failure."""
    m = a.shape[0]
    out[:] = 0.0
    for i in range(m):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= out[i, k] * out[j, k]
            if i == j:
                if s <= 0.0:
                    return False
                out[i, i] = np.sqrt(s)
            else:
                out[i, j] = s / out[j, j]
    return True


@njit(cache=True)
def _safe_chol(a):
    """Cholesky with symmetrize-and-jitter recovery."""
    m = a.shape[0]
    b = 0.5 * (a + a.T)
    out = np.empty((m, m))
    jitter = 0.0
    for _ in range(8):
        if _chol_attempt(b + jitter * np.eye(m), out):
            return out
        jitter = max(jitter * 10.0, 1e-10)
    raise ValueError("state covariance lost positive definiteness")


@njit(cache=True)
def ffbs_ar1(obs, obsvar, mu, rho, th2, z):
    """FFBS for a scalar AR(1) state h_t = mu + rho h_{t-1} + e, e ~ N(0, th2).

    Observation: obs_t = h_t + u_t, u_t ~ N(0, obsvar_t). The filter starts
    from the stationary law of the state. Returns one sampled path.
    """
    t_len = obs.shape[0]
    a = mu / (1.0 - rho)
    p = th2 / (1.0 - rho * rho)
    means = np.empty(t_len)
    variances = np.empty(t_len)
    # t = 0: update the stationary prior directly
    for t in range(t_len):
        if t > 0:
            a = mu + rho * a
            p = rho * rho * p + th2
        s = p + obsvar[t]
        k = p / s
        a = a + k * (obs[t] - a)
        p = p - k * p
        means[t] = a
        variances[t] = p
    path = np.empty(t_len)
    path[t_len - 1] = means[t_len - 1] + np.sqrt(variances[t_len - 1]) * z[t_len - 1]
    for t in range(t_len - 2, -1, -1):
        p = variances[t]
        s = rho * rho * p + th2
        gain = rho * p / s
        mean = means[t] + gain * (path[t + 1] - mu - rho * means[t])
        var = p - gain * rho * p
        path[t] = mean + np.sqrt(max(var, 0.0)) * z[t]
    return path


def ffbs_tvp(yc: np.ndarray, f: np.ndarray, sig2: np.ndarray,
             rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """One joint draw of the normalized TVP state path, plus the filter log-likelihood."""
    means, covs, ll = filter_tvp(
        np.ascontiguousarray(yc, dtype=float),
        np.ascontiguousarray(f, dtype=float),
        np.ascontiguousarray(sig2, dtype=float),
    )
    z = rng.standard_normal(f.shape)
    return sample_tvp_path(means, covs, z), ll


def kalman_loglik(yc: np.ndarray, f: np.ndarray, sig2: np.ndarray) -> float:
    """Marginal log-likelihood of the observations with the states integrated out."""
    _, _, ll = filter_tvp(
        np.ascontiguousarray(yc, dtype=float),
        np.ascontiguousarray(f, dtype=float),
        np.ascontiguousarray(sig2, dtype=float),
    )
    return float(ll)
