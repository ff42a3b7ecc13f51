"""Vintage ingestion, stationarity transforms, target and regressor construction."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

VALID_TRANSFORM_CODES = (1, 2, 4, 5, 6, 7)

# leading observations consumed by each transform code
_DROPPED = {1: 0, 2: 1, 4: 0, 5: 1, 6: 2, 7: 2}


class PanelError(ValueError):
    pass


@dataclass
class Vintage:
    """One data snapshot: raw monthly series plus transform codes and subset flags."""

    id: str
    dates: pd.DatetimeIndex
    series: dict[str, np.ndarray]
    transform_code: dict[str, int]
    part_flag: dict[str, bool]

    def __post_init__(self):
        n = len(self.dates)
        for name, vals in self.series.items():
            if len(vals) != n:
                raise PanelError(f"series {name!r} length {len(vals)} != date index length {n}")
            if name not in self.transform_code:
                raise PanelError(f"missing transform code for {name!r}")
            if not np.all(np.isfinite(vals)):
                raise PanelError(f"series {name!r} contains missing or non-finite values")
        for name, code in self.transform_code.items():
            if code not in VALID_TRANSFORM_CODES:
                raise PanelError(f"invalid transform code {code} for {name!r}")


@dataclass
class PanelMatrix:
    """T x K covariate matrix with a shared monthly index."""

    values: np.ndarray
    dates: pd.DatetimeIndex
    names: list[str]
    location: np.ndarray | None = None  # per-column mean removed by standardize
    scale: np.ndarray | None = None     # per-column std divided out by standardize

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise PanelError("panel values must be 2-D")
        if self.values.shape != (len(self.dates), len(self.names)):
            raise PanelError("panel shape inconsistent with dates/names")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]


@dataclass
class TargetSeries:
    """h-step inflation target, indexed by the forecast origin date t."""

    values: np.ndarray
    horizon: int
    dates: pd.DatetimeIndex


@dataclass
class RegressorSet:
    """Design matrix d_t with a tagged column layout."""

    d: np.ndarray
    dates: pd.DatetimeIndex
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.d.shape[1] != len(self.tags):
            raise PanelError("column tags must cover every regressor column")

    @property
    def M(self) -> int:
        return self.d.shape[1]


def apply_transform(series: np.ndarray, code: int) -> np.ndarray:
    """Apply a stationarity transform; leading rows consumed by differencing are dropped.

    Codes: 1 none, 2 first difference, 4 log level, 5 log difference,
    6 second log difference, 7 difference of the gross growth rate.
    """
    x = np.asarray(series, dtype=float)
    if code not in VALID_TRANSFORM_CODES:
        raise PanelError(f"invalid transform code {code}")
    if len(x) < 1 + _DROPPED[code]:
        raise PanelError(f"series too short for transform code {code}")
    if code in (4, 5, 6, 7) and np.any(x <= 0):
        raise PanelError(f"non-positive value under transform code {code}")
    if code == 1:
        return x.copy()
    if code == 2:
        return np.diff(x)
    if code == 4:
        return np.log(x)
    if code == 5:
        return np.diff(np.log(x))
    if code == 6:
        return np.diff(np.log(x), n=2)
    # code 7
    return np.diff(x[1:] / x[:-1] - 1.0)


def build_panel(vintage: Vintage, names: list[str] | None = None) -> PanelMatrix:
    """Transform every series and align all columns on one trimmed monthly index."""
    if names is None:
        names = sorted(vintage.series)
    max_drop = max(_DROPPED[vintage.transform_code[n]] for n in names)
    cols = []
    for n in names:
        z = apply_transform(vintage.series[n], vintage.transform_code[n])
        drop = max_drop - (len(vintage.series[n]) - len(z))
        cols.append(z[drop:])
    values = np.column_stack(cols)
    return PanelMatrix(values=values, dates=vintage.dates[max_drop:], names=list(names))


def standardize(panel: PanelMatrix) -> PanelMatrix:
    """Scale every column to sample mean zero and unit sample variance (divisor T-1)."""
    x = panel.values
    mu = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    bad = np.flatnonzero(sd <= 0)
    if bad.size:
        raise PanelError(f"constant column(s): {[panel.names[i] for i in bad]}")
    return PanelMatrix(
        values=(x - mu) / sd,
        dates=panel.dates,
        names=list(panel.names),
        location=mu,
        scale=sd,
    )


def build_target(cpi: np.ndarray, h: int, dates: pd.DatetimeIndex | None = None) -> TargetSeries:
    """h-step target: y_{t+h} = ln(CPI_{t+h}/CPI_t) - ln(CPI_t/CPI_{t-1}), indexed by t."""
    c = np.asarray(cpi, dtype=float)
    if np.any(c <= 0):
        raise PanelError("CPI must be strictly positive")
    if len(c) <= h + 1:
        raise PanelError(f"CPI too short for horizon {h}")
    lc = np.log(c)
    # feasible origins t = 1 .. T-h-1 (0-based)
    y = (lc[1 + h:] - lc[1:-h]) - (lc[1:-h] - lc[:-h - 1])
    if dates is None:
        dates = pd.date_range("2000-01-01", periods=len(c), freq="MS")
    return TargetSeries(values=y, horizon=h, dates=dates[1:len(c) - h])


def monthly_inflation(cpi: np.ndarray) -> np.ndarray:
    """First log difference of the CPI, aligned to drop the first month."""
    c = np.asarray(cpi, dtype=float)
    if np.any(c <= 0):
        raise PanelError("CPI must be strictly positive")
    return np.diff(np.log(c))


def stack_lags(panel: PanelMatrix, p: int) -> PanelMatrix:
    """Stack p lags of each covariate: row t holds (s_t', ..., s_{t-p+1}')."""
    if p < 1:
        raise PanelError("p must be >= 1")
    x = panel.values
    T = x.shape[0]
    if T < p:
        raise PanelError("panel too short to stack lags")
    blocks = [x[p - 1 - l:T - l] for l in range(p)]
    names = [f"{n}.l{l}" for l in range(p) for n in panel.names]
    return PanelMatrix(
        values=np.concatenate(blocks, axis=1),
        dates=panel.dates[p - 1:],
        names=names,
    )


def build_regressors(
    y: TargetSeries,
    p: int,
    factors: np.ndarray | None = None,
    factor_dates: pd.DatetimeIndex | None = None,
    extra: PanelMatrix | None = None,
    intercept: bool = True,
) -> RegressorSet:
    """Assemble d_t = (z_t', y_{t-1}, ..., y_{t-p}, extra_t', 1)' on a common index.

    `factors` supplies the compressed block, `extra` uncompressed covariates
    (extended Phillips-curve setup); with both absent, the AR benchmark design.
    """
    if p < 1:
        raise PanelError("p must be >= 1")
    if len(y.values) <= p:
        raise PanelError("target too short for requested lag order")

    # own-lag block on the target's own index: row for origin t carries y_{t-1}..y_{t-p}
    lag_dates = y.dates[p:]
    lags = np.column_stack([y.values[p - k:len(y.values) - k] for k in range(1, p + 1)])

    blocks: list[tuple[pd.DatetimeIndex, np.ndarray, list[str]]] = []
    if factors is not None:
        if factor_dates is None:
            raise PanelError("factor dates required to align the factor block")
        if factors.shape[0] != len(factor_dates):
            raise PanelError("factor matrix row count does not match its dates")
        blocks.append((factor_dates, factors, [f"factor:{i+1}" for i in range(factors.shape[1])]))
    blocks.append((lag_dates, lags, [f"ylag:{k}" for k in range(1, p + 1)]))
    if extra is not None:
        blocks.append((extra.dates, extra.values, [f"extra:{n}" for n in extra.names]))

    common = blocks[0][0]
    for d, _, _ in blocks[1:]:
        common = common.intersection(d)
    if len(common) == 0:
        raise PanelError("no overlapping dates across regressor blocks")

    cols, tags = [], []
    for d, v, t in blocks:
        idx = d.get_indexer(common)
        cols.append(v[idx])
        tags.extend(t)
    d_mat = np.concatenate(cols, axis=1)
    if intercept:
        d_mat = np.concatenate([d_mat, np.ones((d_mat.shape[0], 1))], axis=1)
        tags.append("intercept")
    return RegressorSet(d=d_mat, dates=common, tags=tags)


def rolling_windows(
    dates: pd.DatetimeIndex,
    window_len: int,
    holdout_start,
    holdout_end,
) -> list[tuple[slice, pd.Timestamp]]:
    """One (estimation slice, forecast origin) pair per hold-out month.

    The estimation span is the `window_len` months strictly before each origin.
    """
    holdout_start = pd.Timestamp(holdout_start)
    holdout_end = pd.Timestamp(holdout_end)
    origins = dates[(dates >= holdout_start) & (dates <= holdout_end)]
    if len(origins) == 0:
        raise PanelError("hold-out span contains no dates")
    out = []
    for origin in origins:
        i = dates.get_loc(origin)
        if i < window_len:
            raise PanelError(f"insufficient history before origin {origin.date()}")
        out.append((slice(i - window_len, i), origin))
    return out


# ---------------------------------------------------------------------------
# vintage CSV interface: row 1 mnemonics, row 2 transform codes, then
# YYYY-MM rows; a sidecar text file lists part-flagged mnemonics.
# ---------------------------------------------------------------------------

def load_vintage(csv_path: str | Path, part_path: str | Path | None = None) -> Vintage:
    csv_path = Path(csv_path)
    raw = pd.read_csv(csv_path)
    mnems = [c for c in raw.columns if c.lower() != "date"]
    date_col = [c for c in raw.columns if c.lower() == "date"]
    if not date_col:
        raise PanelError(f"{csv_path.name}: no date column")
    codes_row = raw.iloc[0]
    body = raw.iloc[1:]
    codes = {}
    for m in mnems:
        c = codes_row[m]
        if pd.isna(c):
            raise PanelError(f"{csv_path.name}: missing transform code for {m!r}")
        codes[m] = int(c)
    dates = pd.DatetimeIndex(pd.to_datetime(body[date_col[0]], format="%Y-%m"))
    series = {}
    for m in mnems:
        vals = pd.to_numeric(body[m], errors="coerce").to_numpy(dtype=float)
        if np.any(~np.isfinite(vals)):
            raise PanelError(f"{csv_path.name}: series {m!r} has missing values")
        series[m] = vals
    part: set[str] = set()
    if part_path is not None:
        part = {ln.strip() for ln in Path(part_path).read_text().splitlines() if ln.strip()}
        unknown = part - set(mnems)
        if unknown:
            raise PanelError(f"part-flag file names unknown series: {sorted(unknown)}")
    flags = {m: (m in part) for m in mnems}
    if part_path is not None and not any(flags.values()):
        raise PanelError("no series carries the part flag")
    return Vintage(id=csv_path.stem, dates=dates, series=series,
                   transform_code=codes, part_flag=flags)


def save_panel(panel: PanelMatrix, path: str | Path) -> None:
    df = pd.DataFrame(panel.values, columns=panel.names)
    df.insert(0, "date", panel.dates.strftime("%Y-%m"))
    df.to_csv(path, index=False)


def save_target(target: TargetSeries, path: str | Path) -> None:
    df = pd.DataFrame({
        "date": target.dates.strftime("%Y-%m"),
        f"y_h{target.horizon}": target.values,
    })
    df.to_csv(path, index=False)
