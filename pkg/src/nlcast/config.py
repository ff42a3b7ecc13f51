"""Run configuration: one key = value file with sections, env overrides for paths."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .dimred import CompressionSpec
from .tvp import McmcBudget


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    data_dir: Path
    output_dir: Path
    part_file: Path | None
    target: str
    methods: list[str]
    q_list: list[int]
    priors: list[str]
    modes: list[str]
    include_ar: bool
    include_extpc: bool
    horizons: list[int]
    window_len: int
    holdout_start: str
    holdout_end: str
    p: int
    mcmc: McmcBudget
    master_seed: int
    workers: int
    ae_budget: int
    delta: float
    training_months: int
    benchmark: str
    raw: configparser.ConfigParser = field(repr=False, default=None)


def _split(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    cp.read(path)

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key)
        if default is None:
            raise ConfigError(f"missing config key [{section}] {key}")
        return default

    data_dir = Path(os.environ.get("NLCAST_DATA_DIR", get("data", "vintage_dir")))
    output_dir = Path(os.environ.get("NLCAST_OUTPUT_DIR", get("output", "dir")))
    part_raw = get("data", "part_file", "")
    part_file = Path(part_raw) if part_raw else None

    methods = _split(get("grid", "methods", "pca_linear"))
    for m in methods:
        if m not in CompressionSpec.METHODS:
            raise ConfigError(f"unknown compression method {m!r}")
    priors = [p.upper() for p in _split(get("grid", "priors", "HS,SSVS"))]
    for p in priors:
        if p not in ("HS", "SSVS"):
            raise ConfigError(f"unknown prior {p!r}")
    modes = [m.lower() for m in _split(get("grid", "modes", "const,tvp"))]
    for m in modes:
        if m not in ("const", "tvp"):
            raise ConfigError(f"unknown parameter mode {m!r}")

    if not data_dir.exists():
        raise ConfigError(f"data directory does not exist: {data_dir}")
    if part_file is not None and not part_file.exists():
        raise ConfigError(f"part-flag file does not exist: {part_file}")

    mcmc = McmcBudget(
        draws=int(get("mcmc", "draws", "10000")),
        burn=int(get("mcmc", "burn", "2000")),
        thin=int(get("mcmc", "thin", "1")),
    )
    return RunConfig(
        data_dir=data_dir,
        output_dir=output_dir,
        part_file=part_file,
        target=get("data", "target", "CPIAUCSL"),
        methods=methods,
        q_list=[int(q) for q in _split(get("grid", "q", "5,15,30"))],
        priors=priors,
        modes=modes,
        include_ar=get("grid", "include_ar", "true").lower() == "true",
        include_extpc=get("grid", "include_extpc", "true").lower() == "true",
        horizons=[int(h) for h in _split(get("forecast", "horizons", "1,3,12"))],
        window_len=int(get("forecast", "window_len", "240")),
        holdout_start=get("forecast", "holdout_start"),
        holdout_end=get("forecast", "holdout_end"),
        p=int(get("forecast", "p", "12")),
        mcmc=mcmc,
        master_seed=int(get("run", "master_seed", "1")),
        workers=int(get("run", "workers", "1")),
        ae_budget=int(get("forecast", "ae_budget", "2000")),
        delta=float(get("dma", "delta", "0.9")),
        training_months=int(get("dma", "training_months", "24")),
        benchmark=get("evaluate", "benchmark", "ar-const-hs"),
        raw=cp,
    )
