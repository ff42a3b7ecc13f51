"""Dimension reduction: linear/squared/kernel PCA, diffusion maps, LLE and ISOMAP."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.stats import chi2


class DimRedError(ValueError):
    pass


@dataclass
class CompressionSpec:
    method: str
    q: int
    method_params: dict[str, Any] = field(default_factory=dict)

    METHODS = (
        "pca_linear", "pca_squared", "pca_gauss_kernel", "pca_poly_kernel",
        "diffusion_map", "lle", "isomap", "autoencoder",
    )

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise DimRedError(f"unknown compression method {self.method!r}")
        if self.q < 1:
            raise DimRedError("q must be >= 1")


@dataclass
class FactorMatrix:
    values: np.ndarray
    method: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise DimRedError(f"{self.method}: non-finite factor values")

    @property
    def q(self) -> int:
        return self.values.shape[1]


def fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive."""
    v = vecs.copy()
    idx = np.argmax(np.abs(v), axis=0)
    flip = v[idx, np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    return v


def top_eig_sym(a: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-q eigenpairs of a symmetric matrix, eigenvalues descending, signs fixed."""
    vals, vecs = sla.eigh(a)
    order = np.argsort(vals)[::-1][:q]
    return vals[order], fix_signs(vecs[:, order])


# ---------------------------------------------------------------------------
# PCA family: Z = W Lambda(kappa) with W the (possibly transformed) panel and
# Lambda the truncated eigenvector matrix of the chosen kernel.
# ---------------------------------------------------------------------------

def pca_linear(x: np.ndarray, q: int) -> FactorMatrix:
    x = np.asarray(x, dtype=float)
    t, k = x.shape
    if not 1 <= q <= min(t, k):
        raise DimRedError(f"q={q} out of range for {t}x{k} panel")
    vals, vecs = top_eig_sym(x.T @ x, q)
    share = vals / np.trace(x.T @ x)
    return FactorMatrix(x @ vecs, "pca_linear",
                        {"eigenvalues": vals, "explained_share": share, "loadings": vecs})


def pca_squared(x: np.ndarray, q: int) -> FactorMatrix:
    x = np.asarray(x, dtype=float)
    fm = pca_linear(x * x, q)
    return FactorMatrix(fm.values, "pca_squared", fm.diagnostics)


def kernel_scales(k: int) -> tuple[float, float]:
    """c0 for the polynomial kernel, c1 for the Gaussian kernel."""
    c0 = np.sqrt((k + 2) / 2.0)
    c1 = np.sqrt(chi2.ppf(0.95, df=k)) / np.pi
    return c0, c1


def kernel_matrix(x: np.ndarray, kind: str) -> np.ndarray:
    """K x K kernel over column pairs of the standardized panel."""
    x = np.asarray(x, dtype=float)
    k = x.shape[1]
    if k < 2:
        raise DimRedError("kernel PCA needs at least 2 columns")
    c0, c1 = kernel_scales(k)
    if kind == "gaussian":
        sq = np.sum(x * x, axis=0)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x.T @ x), 0.0)
        np.fill_diagonal(d2, 0.0)
        return np.exp(-np.sqrt(d2) / (2.0 * c1 ** 2))
    if kind == "polynomial":
        return ((x.T @ x) / c0 ** 2 + 1.0) ** 2
    raise DimRedError(f"unknown kernel kind {kind!r}")


def kernel_pca(x: np.ndarray, q: int, kind: str) -> FactorMatrix:
    x = np.asarray(x, dtype=float)
    t, k = x.shape
    if not 1 <= q <= min(t, k):
        raise DimRedError(f"q={q} out of range for {t}x{k} panel")
    kappa = kernel_matrix(x, kind)
    vals, vecs = top_eig_sym(kappa, q)
    method = "pca_gauss_kernel" if kind == "gaussian" else "pca_poly_kernel"
    return FactorMatrix(x @ vecs, method, {"eigenvalues": vals, "loadings": vecs})


# ---------------------------------------------------------------------------
# Diffusion maps over the K column-points of the panel.
# ---------------------------------------------------------------------------

def diffusion_operator(x: np.ndarray, k: int | None = None):
    """Random-walk transition matrix over columns plus its full spectrum.

    Returns (P, eigenvalues, right-eigenvectors psi, stationary distribution),
    with psi normalized so that sum_j pi_j psi_s(j)^2 = 1 and psi_0 constant.
    """
    x = np.asarray(x, dtype=float)
    kk = x.shape[1]
    if kk < 3:
        raise DimRedError("diffusion map needs at least 3 columns")
    if k is None:
        k = max(1, int(np.ceil(0.01 * kk)))
    sq = np.sum(x * x, axis=0)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x.T @ x), 0.0)
    np.fill_diagonal(d2, 0.0)
    # bandwidth: median over points of the k-th nearest-neighbor squared distance
    knn = np.sort(d2, axis=1)[:, min(k, kk - 1)]
    c2 = float(np.median(knn))
    if c2 <= 0:
        c2 = 1.0  # all points coincide; any bandwidth gives a uniform walk
    w = np.exp(-d2 / c2)
    rows = w.sum(axis=1)
    if np.any(rows <= 0):
        raise DimRedError("isolated point: zero affinity row")
    p = w / rows[:, None]
    pi = rows / rows.sum()
    # symmetrize: A = D^{1/2} P D^{-1/2} shares P's spectrum
    s = np.sqrt(pi)
    a = (w / np.sqrt(rows)[:, None]) / np.sqrt(rows)[None, :]
    vals, u = sla.eigh(a)
    order = np.argsort(vals)[::-1]
    vals, u = vals[order], u[:, order]
    psi = fix_signs(u / s[:, None])
    return p, vals, psi, pi


def diffusion_coordinates(x: np.ndarray, q: int, n: int, k: int | None = None) -> np.ndarray:
    """K x q map with column s equal to lambda_s^n psi_s, trivial eigenpair dropped."""
    _, vals, psi, _ = diffusion_operator(x, k)
    if q + 1 > psi.shape[1]:
        raise DimRedError("q too large for the diffusion spectrum")
    lam = vals[1:q + 1]
    return psi[:, 1:q + 1] * np.sign(lam) ** n * np.abs(lam) ** n


def diffusion_map(x: np.ndarray, q: int, n: int | None = None, k: int | None = None) -> FactorMatrix:
    x = np.asarray(x, dtype=float)
    t = x.shape[0]
    if n is None:
        n = t
    _, vals, psi, _ = diffusion_operator(x, k)
    if q + 1 > psi.shape[1]:
        raise DimRedError("q too large for the diffusion spectrum")
    # time factors: project the panel on the retained non-trivial eigenvectors
    psi_q = psi[:, 1:q + 1]
    return FactorMatrix(x @ psi_q, "diffusion_map",
                        {"eigenvalues": vals[1:q + 1], "steps": n, "loadings": psi_q})


# ---------------------------------------------------------------------------
# LLE over the T time rows of the panel.
# ---------------------------------------------------------------------------

def lle_weights(x: np.ndarray, k: int) -> np.ndarray:
    """Row-stochastic reconstruction weights over k nearest neighbors (rows as points)."""
    x = np.asarray(x, dtype=float)
    t = x.shape[0]
    if not 1 <= k < t:
        raise DimRedError(f"neighbor count k={k} out of range for T={t}")
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, np.inf)
    omega = np.zeros((t, t))
    for i in range(t):
        nb = np.argsort(d2[i])[:k]
        diff = x[nb] - x[i]
        g = diff @ diff.T
        g = g + np.eye(k) * (1e-3 * np.trace(g) / k + 1e-12)
        w = sla.solve(g, np.ones(k), assume_a="pos")
        omega[i, nb] = w / w.sum()
    return omega


def auto_k_lle(x: np.ndarray) -> int:
    """Pick k minimizing the reconstruction error of the weight fit."""
    t = x.shape[0]
    best_k, best_err = None, np.inf
    for k in range(4, min(20, t - 1) + 1):
        omega = lle_weights(x, k)
        err = float(np.sum((x - omega @ x) ** 2))
        if err < best_err:
            best_k, best_err = k, err
    if best_k is None:
        raise DimRedError("too few points to select k")
    return best_k


def lle(x: np.ndarray, q: int, k: int | None = None) -> FactorMatrix:
    x = np.asarray(x, dtype=float)
    t = x.shape[0]
    if q >= t - 1:
        raise DimRedError("q too large for LLE")
    if k is None:
        k = auto_k_lle(x)
    omega = lle_weights(x, k)
    m = (np.eye(t) - omega).T @ (np.eye(t) - omega)
    vals, vecs = sla.eigh(m)
    # bottom (constant) eigenvector discarded
    z = fix_signs(vecs[:, 1:q + 1])
    return FactorMatrix(z, "lle", {"k": k, "bottom_eigenvalues": vals[:q + 1], "weights": omega})


# ---------------------------------------------------------------------------
# ISOMAP over the T time rows: Manhattan kNN graph, geodesics, classical MDS.
# ---------------------------------------------------------------------------

def manhattan_distances(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum(np.abs(x[:, None, :] - x[None, :, :]), axis=2)


def knn_graph(dist: np.ndarray, k: int) -> np.ndarray:
    """Symmetric kNN adjacency carrying edge distances, zero where no edge."""
    t = dist.shape[0]
    if not 1 <= k < t:
        raise DimRedError(f"neighbor count k={k} out of range for T={t}")
    g = np.zeros_like(dist)
    for i in range(t):
        nb = np.argsort(dist[i])[1:k + 1]
        g[i, nb] = dist[i, nb]
    return np.maximum(g, g.T)


def geodesic_distances(graph: np.ndarray) -> np.ndarray:
    n_comp, labels = connected_components(graph > 0, directed=False)
    if n_comp > 1:
        comps = [list(np.flatnonzero(labels == c)) for c in range(n_comp)]
        raise DimRedError(f"neighborhood graph disconnected: components {comps}")
    return shortest_path(graph, method="D", directed=False)


def classical_mds(d: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Embed a distance matrix: B = -1/2 J D^2 J, coordinates from top-q eigenpairs."""
    n = d.shape[0]
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (d ** 2) @ j
    b = 0.5 * (b + b.T)
    vals, vecs = sla.eigh(b)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], fix_signs(vecs[:, order])
    pos = np.maximum(vals[:q], 0.0)
    z = vecs[:, :q] * np.sqrt(pos)
    return z, vals


def auto_k_isomap(dist: np.ndarray) -> int:
    """Smallest k giving a connected graph, plus a 2-neighbor margin."""
    t = dist.shape[0]
    for k in range(1, t):
        n_comp, _ = connected_components(knn_graph(dist, k) > 0, directed=False)
        if n_comp == 1:
            return min(k + 2, t - 1)
    raise DimRedError("no k connects the neighborhood graph")


def isomap(x: np.ndarray, q: int, k: int | None = None) -> FactorMatrix:
    x = np.asarray(x, dtype=float)
    dist = manhattan_distances(x)
    if k is None:
        k = auto_k_isomap(dist)
    geo = geodesic_distances(knn_graph(dist, k))
    z, vals = classical_mds(geo, q)
    diag = {"k": k, "eigenvalues": vals[:q], "geodesics": geo}
    if vals[-1] < 0 and abs(vals[-1]) > vals[q - 1]:
        diag["warning"] = (
            f"negative MDS eigenvalue {vals[-1]:.3g} exceeds the q-th positive one"
        )
    return FactorMatrix(z, "isomap", diag)


def compress(x: np.ndarray, spec: CompressionSpec) -> FactorMatrix:
    """Dispatch a standardized T x K panel to the requested technique."""
    from .autoencoder import autoencoder  # deferred: keeps numba out of light paths

    p = spec.method_params
    if spec.method == "pca_linear":
        return pca_linear(x, spec.q)
    if spec.method == "pca_squared":
        return pca_squared(x, spec.q)
    if spec.method == "pca_gauss_kernel":
        return kernel_pca(x, spec.q, "gaussian")
    if spec.method == "pca_poly_kernel":
        return kernel_pca(x, spec.q, "polynomial")
    if spec.method == "diffusion_map":
        return diffusion_map(x, spec.q, n=p.get("n"), k=p.get("k"))
    if spec.method == "lle":
        return lle(x, spec.q, k=p.get("k"))
    if spec.method == "isomap":
        return isomap(x, spec.q, k=p.get("k"))
    if spec.method == "autoencoder":
        return autoencoder(
            x, spec.q,
            seed=p.get("seed", 0),
            training_budget=p.get("training_budget", 2000),
        )
    raise DimRedError(f"unknown compression method {spec.method!r}")
