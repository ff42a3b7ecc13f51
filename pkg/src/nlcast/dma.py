"""Dynamic model averaging with a forgetting factor over model-pool slices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .forecast import PredictiveDensity, ScoreTable, evaluate

LOG_FLOOR = np.log(1e-20)  # failed-forecast weight floor; forgetting lets models re-enter


class DmaError(ValueError):
    pass


@dataclass
class PoolState:
    model_ids: list[str]
    log_weights: np.ndarray
    delta: float
    history: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise DmaError("forgetting factor must lie in (0, 1]")
        if len(self.model_ids) != len(self.log_weights):
            raise DmaError("weight vector does not match the model list")

    @classmethod
    def uniform(cls, model_ids: list[str], delta: float) -> "PoolState":
        n = len(model_ids)
        if n == 0:
            raise DmaError("empty model pool")
        return cls(model_ids=list(model_ids),
                   log_weights=np.full(n, -np.log(n)), delta=delta)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights - logsumexp(self.log_weights))


@dataclass
class PoolSlice:
    """Filter predicates over model-id components of the grid."""

    priors: tuple[str, ...] = ("hs", "ssvs")
    modes: tuple[str, ...] = ("const", "tvp")
    q: tuple[int, ...] | None = None  # None = all, including benchmark models without q

    def matches(self, model_id: str) -> bool:
        parts = model_id.split("-")
        prior, mode = parts[-1], parts[-2]
        if prior not in self.priors or mode not in self.modes:
            return False
        if self.q is not None:
            qpart = [p for p in parts if p.startswith("q") and p[1:].isdigit()]
            if not qpart or int(qpart[0][1:]) not in self.q:
                return False
        return True

    def select(self, model_ids: list[str]) -> list[str]:
        out = [m for m in model_ids if self.matches(m)]
        if not out:
            raise DmaError("pool slice selects no models")
        return out


def predict_weights(state: PoolState) -> np.ndarray:
    """Forgetting recursion: w_j^delta, renormalized (log space)."""
    lw = state.delta * state.log_weights
    norm = logsumexp(lw)
    if not np.isfinite(norm):
        raise DmaError("cannot normalize all-zero weights")
    return lw - norm


def update_weights(predicted_log: np.ndarray, log_liks: np.ndarray) -> np.ndarray:
    """Posterior weights proportional to predicted weight times predictive likelihood."""
    ll = np.where(np.isfinite(log_liks), log_liks, LOG_FLOOR)
    if np.all(~np.isfinite(log_liks)):
        raise DmaError("all member likelihoods are zero")
    lw = predicted_log + ll
    return lw - logsumexp(lw)


def combine(densities: list[PredictiveDensity], weights: np.ndarray) -> PredictiveDensity:
    """Weight-mixture of the member mixtures as one mixture density."""
    if len(densities) != len(weights):
        raise DmaError("one weight per member density required")
    base = densities[0]
    for d in densities[1:]:
        if d.horizon != base.horizon or d.origin != base.origin:
            raise DmaError("pooled members must share origin and horizon")
    means, variances, wts = [], [], []
    for d, w in zip(densities, weights):
        lw = d.log_weights()
        means.append(d.means)
        variances.append(d.variances)
        wts.append(w * np.exp(lw))
    return PredictiveDensity(
        means=np.concatenate(means),
        variances=np.concatenate(variances),
        weights=np.concatenate(wts),
        origin=base.origin,
        horizon=base.horizon,
        model_id="pool",
    )


@dataclass
class DmaResult:
    weight_history: pd.DataFrame      # date x model -> updated weight
    pooled_forecasts: pd.DataFrame    # long format, scored rows past the training span
    scores: ScoreTable


def run_dma(forecasts: pd.DataFrame, slice_: PoolSlice, delta: float,
            training_months: int = 24, pool_id: str = "dma") -> dict[int, DmaResult]:
    """Sequential predict/update over the hold-out months, one recursion per horizon."""
    out = {}
    for h in sorted(forecasts["horizon"].unique()):
        sub = forecasts[forecasts["horizon"] == h]
        members = slice_.select(sorted(sub["model"].unique()))
        state = PoolState.uniform(members, delta)
        wide_lpl = sub.pivot_table(index="date", columns="model", values="lpl")
        wide_pt = sub.pivot_table(index="date", columns="model", values="point")
        wide_real = sub.groupby("date")["realized"].first()
        hist_rows, pooled_rows = [], []
        for i, date in enumerate(wide_lpl.index):
            pred_log = predict_weights(state)
            lpl = wide_lpl.loc[date].reindex(members).to_numpy()
            pts = wide_pt.loc[date].reindex(members).to_numpy()
            lpl_filled = np.where(np.isfinite(lpl), lpl, LOG_FLOOR)
            w = np.exp(pred_log - logsumexp(pred_log))
            pooled_lpl = float(logsumexp(pred_log + lpl_filled))
            ok = np.isfinite(pts)
            pooled_point = float(np.sum(w[ok] * pts[ok]) / np.sum(w[ok]))
            if i >= training_months:
                pooled_rows.append({
                    "model": pool_id, "horizon": int(h), "date": date,
                    "realized": float(wide_real.loc[date]),
                    "point": pooled_point, "lpl": pooled_lpl,
                })
            state = PoolState(model_ids=members,
                              log_weights=update_weights(pred_log, lpl),
                              delta=delta)
            hist_rows.append(pd.Series(state.weights, index=members, name=date))
        pooled = pd.DataFrame(pooled_rows)
        out[int(h)] = DmaResult(
            weight_history=pd.DataFrame(hist_rows),
            pooled_forecasts=pooled,
            scores=evaluate(pooled) if len(pooled) else ScoreTable(pd.DataFrame()),
        )
    return out
