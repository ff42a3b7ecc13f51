"""Command-line driver: transform, compress, forecast, evaluate, combine, report."""

from __future__ import annotations

import logging
import sys
from itertools import product
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import panel as pnl
from .config import ConfigError, load_config
from .dimred import CompressionSpec, compress
from .dma import PoolSlice, run_dma
from .forecast import (CellStore, ForecastError, RollingConfig, build_model_grid,
                       evaluate, rolling_forecast)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("nlcast")


def _load(config_path):
    try:
        return load_config(config_path)
    except (ConfigError, pnl.PanelError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _vintages(cfg):
    files = sorted(Path(cfg.data_dir).glob("*.csv"))
    if not files:
        click.echo(f"config error: no vintage CSVs in {cfg.data_dir}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        return [pnl.load_vintage(f, cfg.part_file) for f in files]
    except pnl.PanelError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _outdir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
@click.option("--verbose", is_flag=True)
def main(verbose):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)


@main.command()
@click.argument("config_path", type=click.Path())
def transform(config_path):
    """Standardized panels and h-step targets from the vintage CSVs."""
    cfg = _load(config_path)
    out = _outdir(cfg)
    for vint in _vintages(cfg):
        covars = [n for n in sorted(vint.series) if n != cfg.target]
        if cfg.target not in vint.series:
            click.echo(f"config error: target {cfg.target!r} missing in vintage {vint.id}",
                       err=True)
            sys.exit(EXIT_CONFIG)
        std = pnl.standardize(pnl.build_panel(vint, covars))
        pnl.save_panel(std, out / f"panel_{vint.id}.csv")
        for h in cfg.horizons:
            tgt = pnl.build_target(vint.series[cfg.target], h, vint.dates)
            pnl.save_target(tgt, out / f"target_{vint.id}_h{h}.csv")
    click.echo(f"wrote panels for {len(list(Path(cfg.data_dir).glob('*.csv')))} vintage(s)")


@main.command(name="compress")
@click.argument("config_path", type=click.Path())
def compress_cmd(config_path):
    """Factor CSVs (plus eigenvalue-share sidecars) for every requested method."""
    cfg = _load(config_path)
    out = _outdir(cfg)
    vint = _vintages(cfg)[-1]
    covars = [n for n in sorted(vint.series) if n != cfg.target]
    std = pnl.standardize(pnl.stack_lags(pnl.build_panel(vint, covars), cfg.p))
    q = cfg.q_list[0]
    for method in cfg.methods:
        params = {"seed": cfg.master_seed, "training_budget": cfg.ae_budget} \
            if method == "autoencoder" else {}
        try:
            fm = compress(std.values, CompressionSpec(method, q, params))
        except Exception as exc:  # noqa: BLE001
            click.echo(f"runtime error in {method}: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
        df = pd.DataFrame(fm.values, columns=[f"f{i+1}" for i in range(q)])
        df.insert(0, "date", std.dates.strftime("%Y-%m"))
        df.to_csv(out / f"factors_{method}_q{q}.csv", index=False)
        eig = fm.diagnostics.get("eigenvalues")
        if eig is not None:
            pd.DataFrame({"component": np.arange(1, len(eig) + 1),
                          "eigenvalue": eig}).to_csv(
                out / f"factors_{method}_q{q}_diag.csv", index=False)
    click.echo(f"wrote factors for {len(cfg.methods)} method(s)")


def _grid_and_cfg(cfg):
    grid = build_model_grid(cfg.methods, cfg.q_list, cfg.priors, cfg.modes,
                            cfg.include_ar, cfg.include_extpc)
    rcfg = RollingConfig(
        horizons=cfg.horizons, window_len=cfg.window_len,
        holdout_start=cfg.holdout_start, holdout_end=cfg.holdout_end,
        p=cfg.p, mcmc=cfg.mcmc, master_seed=cfg.master_seed,
        target=cfg.target, ae_budget=cfg.ae_budget,
    )
    return grid, rcfg


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--dry-run", is_flag=True, help="print the grid cell count and exit")
def forecast(config_path, dry_run):
    """Rolling real-time forecast panel; completed cells persist and reruns resume."""
    cfg = _load(config_path)
    grid, rcfg = _grid_and_cfg(cfg)
    vints = _vintages(cfg)
    windows = pnl.rolling_windows(vints[-1].dates, cfg.window_len,
                                  cfg.holdout_start, cfg.holdout_end)
    n_cells = len(grid) * len(windows) * len(cfg.horizons)
    if dry_run:
        click.echo(f"{len(grid)} models x {len(windows)} windows x "
                   f"{len(cfg.horizons)} horizons = {n_cells} cells")
        return
    out = _outdir(cfg)
    store = CellStore(out / "cells")
    panel = rolling_forecast(vints, grid, rcfg, cell_store=store)
    if panel.empty:
        click.echo("runtime error: no cell produced a forecast", err=True)
        sys.exit(EXIT_RUNTIME)
    cols = ["model", "horizon", "date", "origin", "realized", "point", "lpl"]
    panel[cols].to_csv(out / "forecasts.csv", index=False)
    done = len(panel)
    click.echo(f"completed {done}/{n_cells} cells")
    if done < n_cells:
        sys.exit(EXIT_RUNTIME)


def _read_panel(cfg) -> pd.DataFrame:
    path = Path(cfg.output_dir) / "forecasts.csv"
    if not path.exists():
        click.echo(f"config error: {path} not found (run `forecast` first)", err=True)
        sys.exit(EXIT_CONFIG)
    df = pd.read_csv(path, parse_dates=["date", "origin"])
    return df


@main.command(name="evaluate")
@click.argument("config_path", type=click.Path())
def evaluate_cmd(config_path):
    """Absolute and benchmark-relative score tables."""
    cfg = _load(config_path)
    panel = _read_panel(cfg)
    out = _outdir(cfg)
    scores = evaluate(panel)
    scores.table.to_csv(out / "scores.csv", index=False)
    try:
        rel = scores.relative_to(cfg.benchmark)
    except ForecastError as exc:
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    rel.to_csv(out / "scores_relative.csv", index=False)
    click.echo(f"scored {len(scores.table)} (model, horizon) cells")


@main.command()
@click.argument("config_path", type=click.Path())
def combine(config_path):
    """DMA pooled scores over the prior/mode/q slice grid, plus weight histories."""
    cfg = _load(config_path)
    panel = _read_panel(cfg)
    out = _outdir(cfg)
    prior_opts = [tuple(p.lower() for p in cfg.priors)] + \
        [(p.lower(),) for p in cfg.priors if len(cfg.priors) > 1]
    mode_opts = [tuple(cfg.modes)] + \
        [(m,) for m in cfg.modes if len(cfg.modes) > 1]
    q_opts = [None] + ([tuple([q]) for q in cfg.q_list] if len(cfg.q_list) > 1 else [])
    rows = []
    for priors, modes, qs in product(prior_opts, mode_opts, q_opts):
        slice_ = PoolSlice(priors=priors, modes=modes, q=qs)
        slice_id = "dma[{}|{}|{}]".format(
            "+".join(priors), "+".join(modes),
            "all" if qs is None else "+".join(map(str, qs)))
        try:
            results = run_dma(panel, slice_, cfg.delta, cfg.training_months,
                              pool_id=slice_id)
        except Exception as exc:  # noqa: BLE001
            log.warning("slice %s skipped: %s", slice_id, exc)
            continue
        for h, res in results.items():
            if res.scores.table.empty:
                continue
            rec = res.scores.table.iloc[0].to_dict()
            rec.update({"slice": slice_id, "horizon": h})
            rows.append(rec)
            hist = res.weight_history
            hist.insert(0, "date", hist.index.strftime("%Y-%m"))
            hist.to_csv(out / f"weights_{slice_id}_h{h}.csv", index=False)
    pd.DataFrame(rows).to_csv(out / "dma_scores.csv", index=False)
    click.echo(f"wrote {len(rows)} pooled score rows")


@main.command()
@click.argument("config_path", type=click.Path())
def report(config_path):
    """Plot-ready long-format CSVs: factors, cumulative Bayes factors, weights."""
    cfg = _load(config_path)
    out = _outdir(cfg)
    # factor series in long format
    for f in sorted(out.glob("factors_*.csv")):
        if f.name.endswith("_diag.csv") or f.name.startswith("factors_long"):
            continue
        df = pd.read_csv(f)
        long = df.melt(id_vars="date", var_name="factor", value_name="value")
        long.insert(0, "method", f.stem.replace("factors_", ""))
        long.to_csv(out / f"report_{f.stem}_long.csv", index=False)
    # cumulative log Bayes factors vs the benchmark
    path = Path(cfg.output_dir) / "forecasts.csv"
    if path.exists():
        panel = _read_panel(cfg)
        rows = []
        for h in sorted(panel["horizon"].unique()):
            sub = panel[panel["horizon"] == h]
            wide = sub.pivot_table(index="date", columns="model", values="lpl")
            if cfg.benchmark not in wide.columns:
                continue
            cum = (wide.sub(wide[cfg.benchmark], axis=0)).cumsum()
            long = cum.reset_index().melt(id_vars="date", var_name="model",
                                          value_name="cum_log_bf")
            long["horizon"] = h
            rows.append(long)
        if rows:
            pd.concat(rows).to_csv(out / "report_cum_log_bf.csv", index=False)
    # weight heatmap data
    rows = []
    for f in sorted(out.glob("weights_*.csv")):
        df = pd.read_csv(f)
        long = df.melt(id_vars="date", var_name="model", value_name="weight")
        long.insert(0, "slice", f.stem.replace("weights_", ""))
        rows.append(long)
    if rows:
        pd.concat(rows).to_csv(out / "report_weights_long.csv", index=False)
    click.echo("report CSVs written")


if __name__ == "__main__":
    main()
