"""Shared synthetic-data helpers: FRED-MD-style vintage files and objects."""

import numpy as np
import pandas as pd
import pytest

from nlcast import panel as pnl


def synth_vintage(t=120, k=5, seed=0, vintage_id="2020-01", start="2000-01-01",
                  break_at=None):
    """In-memory vintage: k persistent covariates plus a CPIAUCSL level series.

    `break_at` shifts the inflation drift from that row onward (regime change).
    """
    rng = np.random.default_rng(seed)
    dates = pd.date_range(start, periods=t, freq="MS")
    series, codes = {}, {}
    common = np.zeros(t)
    for s in range(1, t):
        common[s] = 0.85 * common[s - 1] + rng.standard_normal()
    for j in range(k):
        x = np.zeros(t)
        for s in range(1, t):
            x[s] = 0.7 * x[s - 1] + 0.5 * common[s] + rng.standard_normal()
        if j % 3 == 0:
            series[f"IND{j:02d}"] = 100.0 * np.exp(0.01 * x)
            codes[f"IND{j:02d}"] = 5
        elif j % 3 == 1:
            series[f"IND{j:02d}"] = 50.0 + np.cumsum(0.1 * x)
            codes[f"IND{j:02d}"] = 2
        else:
            series[f"IND{j:02d}"] = x
            codes[f"IND{j:02d}"] = 1
    drift = np.full(t, 0.002) + 0.0015 * common / max(1.0, np.abs(common).max())
    if break_at is not None:
        drift[break_at:] += 0.004
    infl = drift + 0.001 * rng.standard_normal(t)
    series["CPIAUCSL"] = 100.0 * np.exp(np.cumsum(infl))
    codes["CPIAUCSL"] = 5
    flags = {n: n.endswith(("00", "01")) for n in series}
    return pnl.Vintage(id=vintage_id, dates=dates, series=series,
                       transform_code=codes, part_flag=flags)


def write_vintage_csv(vint, directory):
    """Serialize a vintage in the package's CSV layout; returns the file path."""
    directory.mkdir(parents=True, exist_ok=True)
    names = sorted(vint.series)
    lines = ["date," + ",".join(names)]
    lines.append("code," + ",".join(str(vint.transform_code[n]) for n in names))
    for i, d in enumerate(vint.dates):
        vals = ",".join(repr(float(vint.series[n][i])) for n in names)
        lines.append(f"{d.strftime('%Y-%m')},{vals}")
    path = directory / f"{vint.id}.csv"
    path.write_text("\n".join(lines) + "\n")
    part = directory / "part.txt"
    part.write_text("\n".join(n for n in names if vint.part_flag[n]) + "\n")
    return path


@pytest.fixture
def vintage_dir(tmp_path):
    vint = synth_vintage()
    write_vintage_csv(vint, tmp_path / "vintages")
    return tmp_path / "vintages"
