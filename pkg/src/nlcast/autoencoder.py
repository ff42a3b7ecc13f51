"""Bottleneck autoencoder trained from scratch with full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from .dimred import DimRedError, FactorMatrix

DEPTH = 5  # encoder hidden layers; the fifth is the bottleneck


def _layer_widths(k: int, q: int) -> list[int]:
    """Encoder widths interpolated linearly from the input width down to q."""
    w = np.round(np.linspace(k, q, DEPTH + 1)).astype(int)[1:]
    w[-1] = q
    return [int(v) for v in w]


def _init_params(widths: list[int], rng: np.random.Generator):
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params.append((rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                       np.zeros(fan_out)))
    return params


def _forward(x, params, n_tanh):
    """Return activations per layer; tanh on the first n_tanh layers, linear after."""
    acts = [x]
    h = x
    for i, (w, b) in enumerate(params):
        pre = h @ w + b
        h = np.tanh(pre) if i < n_tanh else pre
        acts.append(h)
    return acts


def _loss_and_grads(x, params, n_tanh):
    acts = _forward(x, params, n_tanh)
    xhat = acts[-1]
    resid = xhat - x
    n = x.size
    loss = float(np.sum(resid * resid) / n)
    grads = []
    delta = 2.0 * resid / n
    for i in range(len(params) - 1, -1, -1):
        if i < n_tanh:
            delta = delta * (1.0 - acts[i + 1] ** 2)
        w, _ = params[i]
        grads.append((acts[i].T @ delta, delta.sum(axis=0)))
        delta = delta @ w.T
    grads.reverse()
    return loss, grads


def autoencoder(
    x: np.ndarray,
    q: int,
    seed: int = 0,
    training_budget: int = 2000,
    lr: float = 0.1,
) -> FactorMatrix:
    """Encode a standardized panel to its q-dimensional bottleneck representation.

    Deterministic for a fixed seed and budget; the step size halves whenever a
    full-batch step would increase the reconstruction MSE, so recorded losses
    are non-increasing.
    """
    x = np.asarray(x, dtype=float)
    t, k = x.shape
    if q >= k:
        raise DimRedError("autoencoder bottleneck must be narrower than the input")
    rng = np.random.default_rng(seed)
    enc = _layer_widths(k, q)
    widths = [k] + enc + enc[-2::-1] + [k]
    n_tanh = len(widths) - 2  # all hidden layers tanh, output layer linear
    params = _init_params(widths, rng)

    loss, grads = _loss_and_grads(x, params, n_tanh)
    initial_loss = loss
    checkpoints = [loss]
    for it in range(training_budget):
        cand = [(w - lr * gw, b - lr * gb) for (w, b), (gw, gb) in zip(params, grads)]
        new_loss, new_grads = _loss_and_grads(x, cand, n_tanh)
        if not np.isfinite(new_loss):
            raise DimRedError(f"autoencoder training diverged at iteration {it}")
        if new_loss > loss:
            lr *= 0.5
            if lr < 1e-12:
                break
            continue
        params, loss, grads = cand, new_loss, new_grads
        if (it + 1) % 100 == 0:
            checkpoints.append(loss)

    n_enc = len(enc)
    z = _forward(x, params[:n_enc], n_enc)[-1]
    return FactorMatrix(z, "autoencoder", {
        "initial_mse": initial_loss,
        "final_mse": loss,
        "checkpoint_mse": checkpoints,
        "widths": widths,
        "seed": seed,
    })
