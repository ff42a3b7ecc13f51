"""Predictive densities, scoring, and the rolling real-time forecasting loop."""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from . import panel as pnl
from .dimred import CompressionSpec, compress
from .tvp import McmcBudget, ModelSpec, PosteriorDraws, run_mcmc

log = logging.getLogger(__name__)

LOG2PI = float(np.log(2.0 * np.pi))


class ForecastError(RuntimeError):
    pass


@dataclass
class PredictiveDensity:
    """Normal mixture; equal weights unless an explicit weight vector is set."""

    means: np.ndarray
    variances: np.ndarray
    origin: object = None
    horizon: int = 1
    model_id: str = ""
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        if self.means.shape != self.variances.shape or self.means.ndim != 1:
            raise ForecastError("mixture components malformed")
        if len(self.means) < 1 or np.any(self.variances <= 0):
            raise ForecastError("mixture needs >= 1 component with positive variance")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.means.shape or np.any(self.weights < 0):
                raise ForecastError("bad mixture weights")

    def log_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(len(self.means), -np.log(len(self.means)))
        return np.log(self.weights) - np.log(self.weights.sum())


def predictive_density(draws: PosteriorDraws, d_last: np.ndarray, h: int,
                       origin=None, model_id: str = "",
                       rng: np.random.Generator | None = None) -> PredictiveDensity:
    """One mixture component per retained draw via one-step state propagation."""
    if rng is None:
        rng = np.random.default_rng(0)
    d_last = np.asarray(d_last, dtype=float)
    s = draws.S
    eta = rng.standard_normal((s, len(d_last)))
    beta_next = (draws.beta0 + draws.sqrt_v * (draws.beta_tilde_T + eta))
    mu = beta_next @ d_last
    xi = rng.standard_normal(s)
    logvol_next = draws.mu_h + draws.rho_h * draws.h_T + np.sqrt(draws.theta2_h) * xi
    var = np.exp(logvol_next)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(var))):
        raise ForecastError("non-finite predictive component")
    return PredictiveDensity(means=mu, variances=var, origin=origin,
                             horizon=h, model_id=model_id)


def log_pred_likelihood(density: PredictiveDensity, realized: float) -> float:
    lw = density.log_weights()
    comp = -0.5 * (LOG2PI + np.log(density.variances)
                   + (realized - density.means) ** 2 / density.variances)
    return float(logsumexp(lw + comp))


def point_forecast(density: PredictiveDensity) -> float:
    lw = density.log_weights()
    return float(np.sum(np.exp(lw) * density.means))


@dataclass
class ScoreTable:
    """Per (model, horizon) average LPL and RMSE, with per-period LPL series."""

    table: pd.DataFrame
    lpl_series: dict[tuple[str, int], pd.Series] = field(default_factory=dict)

    def relative_to(self, benchmark: str, mode: str = "sum") -> pd.DataFrame:
        """Relative LPL (difference, summed or averaged) and RMSE ratio per horizon."""
        rows = []
        for h in sorted(self.table["horizon"].unique()):
            sub = self.table[self.table["horizon"] == h].set_index("model")
            if benchmark not in sub.index:
                raise ForecastError(f"benchmark {benchmark!r} missing at horizon {h}")
            bench = sub.loc[benchmark]
            for model, row in sub.iterrows():
                diff = row["avg_lpl"] - bench["avg_lpl"]
                if mode == "sum":
                    diff *= row["n_periods"]
                rows.append({
                    "model": model, "horizon": h,
                    "rel_lpl": diff,
                    "rmse_ratio": row["rmse"] / bench["rmse"],
                    "bench_avg_lpl": bench["avg_lpl"],
                    "bench_rmse": bench["rmse"],
                })
        return pd.DataFrame(rows)


def evaluate(forecasts: pd.DataFrame) -> ScoreTable:
    """Score a long-format forecast panel with columns
    model, horizon, date, realized, point, lpl."""
    need = {"model", "horizon", "date", "realized", "point", "lpl"}
    if not need <= set(forecasts.columns):
        raise ForecastError(f"forecast panel missing columns {need - set(forecasts.columns)}")
    rows, series = [], {}
    for (model, h), grp in forecasts.groupby(["model", "horizon"]):
        err = grp["point"].to_numpy() - grp["realized"].to_numpy()
        rows.append({
            "model": model, "horizon": h,
            "avg_lpl": float(grp["lpl"].mean()),
            "rmse": float(np.sqrt(np.mean(err ** 2))),
            "n_periods": len(grp),
        })
        series[(model, int(h))] = pd.Series(grp["lpl"].to_numpy(), index=grp["date"])
    return ScoreTable(table=pd.DataFrame(rows), lpl_series=series)


# ---------------------------------------------------------------------------
# model grid and the rolling loop
# ---------------------------------------------------------------------------

@dataclass
class ModelCell:
    model_id: str
    kind: str               # "factor", "ar", "extpc"
    method: str | None = None
    q: int | None = None
    tvp: bool = False
    prior: str = "HS"


def build_model_grid(methods: list[str], q_list: list[int], priors: list[str],
                     param_modes: list[str], include_ar: bool = True,
                     include_extpc: bool = True) -> list[ModelCell]:
    """Factor models crossed over (method, q, prior, mode), plus benchmarks.

    The extended Phillips-curve configuration is estimated in constant-parameter
    form only.
    """
    cells = []
    for method, q, prior, mode in product(methods, q_list, priors, param_modes):
        cells.append(ModelCell(
            model_id=f"{method}-q{q}-{mode}-{prior.lower()}",
            kind="factor", method=method, q=q, tvp=(mode == "tvp"), prior=prior,
        ))
    if include_ar:
        for prior, mode in product(priors, param_modes):
            cells.append(ModelCell(model_id=f"ar-{mode}-{prior.lower()}",
                                   kind="ar", tvp=(mode == "tvp"), prior=prior))
    if include_extpc:
        for prior in priors:
            cells.append(ModelCell(model_id=f"extpc-const-{prior.lower()}",
                                   kind="extpc", tvp=False, prior=prior))
    return cells


@dataclass
class RollingConfig:
    horizons: list[int]
    window_len: int
    holdout_start: str
    holdout_end: str
    p: int = 12
    mcmc: McmcBudget = field(default_factory=McmcBudget)
    master_seed: int = 1
    target: str = "CPIAUCSL"
    ae_budget: int = 2000


def _cell_seed(master: int, window_idx: int, model_id: str, h: int) -> list[int]:
    # model identity enters via crc32 so seeds survive grid re-ordering
    return [master, h, window_idx, zlib.crc32(model_id.encode())]


def _prepare_window(vintage: pnl.Vintage, cfg: RollingConfig, cell: ModelCell,
                    h: int, est: slice, seed: list[int]):
    """Window-local factors, regressors and estimation pairs for one model cell."""
    target_raw = vintage.series[cfg.target]
    y_full = pnl.build_target(target_raw, h, vintage.dates)
    y_ser = pd.Series(y_full.values, index=y_full.dates)

    covar_names = [n for n in sorted(vintage.series) if n != cfg.target]
    raw_panel = pnl.build_panel(vintage, covar_names)

    win_dates = vintage.dates[est]
    win_start, win_end = win_dates[0], win_dates[-1]

    factors = factor_dates = None
    extra = None
    if cell.kind == "factor":
        mask = (raw_panel.dates >= win_start) & (raw_panel.dates <= win_end)
        sub = pnl.PanelMatrix(raw_panel.values[mask], raw_panel.dates[mask],
                              raw_panel.names)
        stacked = pnl.stack_lags(sub, cfg.p)
        std = pnl.standardize(stacked)
        params = {}
        if cell.method == "autoencoder":
            params = {"seed": abs(hash(tuple(seed))) % (2 ** 31),
                      "training_budget": cfg.ae_budget}
        fm = compress(std.values, CompressionSpec(cell.method, cell.q, params))
        factors, factor_dates = fm.values, std.dates
    elif cell.kind == "extpc":
        part_names = [n for n in covar_names if vintage.part_flag.get(n)]
        if not part_names:
            raise ForecastError("extended-PC configuration needs part-flagged series")
        mask = (raw_panel.dates >= win_start) & (raw_panel.dates <= win_end)
        idx = [raw_panel.names.index(n) for n in part_names]
        extra = pnl.standardize(pnl.PanelMatrix(
            raw_panel.values[mask][:, idx], raw_panel.dates[mask], part_names))

    reg = pnl.build_regressors(y_full, cfg.p, factors=factors,
                               factor_dates=factor_dates, extra=extra)

    # estimation pairs: origins t with d_t in the window and y_{t+h} observed
    # strictly inside the window (no future leakage past win_end)
    est_mask = (reg.dates >= win_start) & (reg.dates <= win_end - pd.DateOffset(months=h))
    est_dates = reg.dates[est_mask]
    common = est_dates.intersection(y_ser.index)
    d_est = reg.d[reg.dates.get_indexer(common)]
    y_est = y_ser.loc[common].to_numpy()

    if win_end not in reg.dates:
        raise ForecastError(f"no regressor row at window end {win_end.date()}")
    d_last = reg.d[reg.dates.get_loc(win_end)]
    return y_est, d_est, d_last, win_end


def rolling_forecast(
    vintages: list[pnl.Vintage],
    grid: list[ModelCell],
    cfg: RollingConfig,
    cell_store: "CellStore | None" = None,
) -> pd.DataFrame:
    """Re-estimate every grid cell on every rolling window and emit a forecast panel.

    Per-cell failures are logged and skipped. Realizations come from the final
    vintage. Deterministic under the master seed.
    """
    vintages = sorted(vintages, key=lambda v: v.id)
    final = vintages[-1]
    dates = final.dates
    windows = pnl.rolling_windows(dates, cfg.window_len,
                                  cfg.holdout_start, cfg.holdout_end)
    rows = []
    for h in cfg.horizons:
        realized_full = pnl.build_target(final.series[cfg.target], h, final.dates)
        # realization of y_{t+h} lives at origin index t; key by realization date t+h
        realized = pd.Series(
            realized_full.values,
            index=realized_full.dates + pd.DateOffset(months=h),
        )
        for w_idx, (est, origin) in enumerate(windows):
            vint = _vintage_for(vintages, origin)
            for cell in grid:
                key = (cell.model_id, h, origin.strftime("%Y-%m"))
                if cell_store is not None:
                    cached = cell_store.load(*key)
                    if cached is not None:
                        rows.append(cached)
                        continue
                seed = _cell_seed(cfg.master_seed, w_idx, cell.model_id, h)
                try:
                    row = _forecast_cell(vint, cfg, cell, h, est, seed, realized, origin)
                except Exception as exc:  # noqa: BLE001 - recorded gap, not fatal
                    log.warning("cell %s failed at %s: %s", cell.model_id,
                                origin.date(), exc)
                    continue
                if cell_store is not None:
                    cell_store.save(*key, row)
                rows.append(row)
    return pd.DataFrame(rows)


def _forecast_cell(vint, cfg, cell, h, est, seed, realized, origin) -> dict:
    y_est, d_est, d_last, win_end = _prepare_window(vint, cfg, cell, h, est, seed)
    spec = ModelSpec(tvp=cell.tvp, prior=cell.prior, mcmc=cfg.mcmc,
                     seed=abs(hash(tuple(seed))) % (2 ** 31))
    draws = run_mcmc(y_est, d_est, spec)
    rng = np.random.default_rng(seed + [7])
    dens = predictive_density(draws, d_last, h, origin=origin,
                              model_id=cell.model_id, rng=rng)
    realization_date = win_end + pd.DateOffset(months=h)
    if realization_date not in realized.index:
        raise ForecastError(f"no realization at {realization_date.date()}")
    y_real = float(realized.loc[realization_date])
    return {
        "model": cell.model_id,
        "horizon": h,
        "date": realization_date,
        "origin": origin,
        "realized": y_real,
        "point": point_forecast(dens),
        "lpl": log_pred_likelihood(dens, y_real),
        "comp_means": dens.means.tolist(),
        "comp_vars": dens.variances.tolist(),
    }


def _vintage_for(vintages: list[pnl.Vintage], origin: pd.Timestamp) -> pnl.Vintage:
    """Latest vintage dated at or before the origin, else the earliest available."""
    stamp = origin.strftime("%Y-%m")
    eligible = [v for v in vintages if v.id <= stamp]
    return eligible[-1] if eligible else vintages[0]


class CellStore:
    """Immediate per-cell persistence so interrupted runs resume where they stopped."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, model_id: str, h: int, origin: str) -> Path:
        return self.root / f"{model_id}__h{h}__{origin}.json"

    def load(self, model_id: str, h: int, origin: str) -> dict | None:
        import json

        p = self._path(model_id, h, origin)
        if not p.exists():
            return None
        row = json.loads(p.read_text())
        row["date"] = pd.Timestamp(row["date"])
        row["origin"] = pd.Timestamp(row["origin"])
        return row

    def save(self, model_id: str, h: int, origin: str, row: dict) -> None:
        import json

        ser = dict(row)
        ser["date"] = row["date"].strftime("%Y-%m-%d")
        ser["origin"] = row["origin"].strftime("%Y-%m-%d")
        self._path(model_id, h, origin).write_text(json.dumps(ser))
