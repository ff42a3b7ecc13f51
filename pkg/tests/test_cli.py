import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from conftest import synth_vintage, write_vintage_csv
from nlcast.cli import main


def _write_config(tmp_path, data_dir, out_dir, **overrides):
    opts = {
        "target": "CPIAUCSL",
        "methods": "pca_linear",
        "q": "2",
        "priors": "HS",
        "modes": "const",
        "include_ar": "true",
        "include_extpc": "true",
        "horizons": "1",
        "window_len": "60",
        "holdout_start": "2009-01-01",
        "holdout_end": "2009-02-01",
        "p": "3",
        "ae_budget": "100",
        "draws": "60",
        "burn": "30",
        "delta": "0.9",
        "training_months": "0",
        "benchmark": "ar-const-hs",
    }
    opts.update(overrides)
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"""\
[data]
vintage_dir = {data_dir}
part_file = {data_dir}/part.txt
target = {opts['target']}

[grid]
methods = {opts['methods']}
q = {opts['q']}
priors = {opts['priors']}
modes = {opts['modes']}
include_ar = {opts['include_ar']}
include_extpc = {opts['include_extpc']}

[forecast]
horizons = {opts['horizons']}
window_len = {opts['window_len']}
holdout_start = {opts['holdout_start']}
holdout_end = {opts['holdout_end']}
p = {opts['p']}
ae_budget = {opts['ae_budget']}

[mcmc]
draws = {opts['draws']}
burn = {opts['burn']}

[run]
master_seed = 7

[dma]
delta = {opts['delta']}
training_months = {opts['training_months']}

[evaluate]
benchmark = {opts['benchmark']}

[output]
dir = {out_dir}
""")
    return cfg


@pytest.fixture
def workspace(tmp_path):
    data_dir = tmp_path / "vintages"
    write_vintage_csv(synth_vintage(t=120, k=5, seed=0), data_dir)
    out_dir = tmp_path / "out"
    cfg = _write_config(tmp_path, data_dir, out_dir)
    return cfg, data_dir, out_dir


def _run(*args):
    return CliRunner().invoke(main, list(args),
                              env={"NLCAST_DATA_DIR": None, "NLCAST_OUTPUT_DIR": None})


class TestConfigErrors:
    def test_missing_config_file(self, tmp_path):
        result = _run("transform", str(tmp_path / "absent.ini"))
        assert result.exit_code == 2

    def test_unknown_method(self, workspace, tmp_path):
        cfg, data_dir, out_dir = workspace
        bad = _write_config(tmp_path, data_dir, out_dir, methods="tsne")
        assert _run("transform", str(bad)).exit_code == 2

    def test_missing_target_series(self, workspace, tmp_path):
        cfg, data_dir, out_dir = workspace
        bad = _write_config(tmp_path, data_dir, out_dir, target="ABSENT")
        assert _run("transform", str(bad)).exit_code == 2

    def test_missing_transform_code_names_mnemonic(self, workspace):
        cfg, data_dir, _ = workspace
        f = data_dir / "2020-01.csv"
        lines = f.read_text().splitlines()
        head = lines[0].split(",")
        codes = lines[1].split(",")
        codes[2] = ""  # blank the code under the second mnemonic
        lines[1] = ",".join(codes)
        f.write_text("\n".join(lines) + "\n")
        result = _run("transform", str(cfg))
        assert result.exit_code == 2
        assert head[2] in result.output

    def test_missing_data_dir(self, tmp_path):
        cfg = _write_config(tmp_path, tmp_path / "nowhere", tmp_path / "out")
        assert _run("transform", str(cfg)).exit_code == 2


class TestTransform:
    def test_writes_panel_and_targets(self, workspace):
        cfg, _, out_dir = workspace
        result = _run("transform", str(cfg))
        assert result.exit_code == 0, result.output
        assert (out_dir / "panel_2020-01.csv").exists()
        assert (out_dir / "target_2020-01_h1.csv").exists()
        panel = pd.read_csv(out_dir / "panel_2020-01.csv")
        vals = panel.drop(columns="date").to_numpy()
        np.testing.assert_allclose(vals.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(vals.std(axis=0, ddof=1), 1.0, atol=1e-8)

    def test_rerun_byte_identical(self, workspace):
        cfg, _, out_dir = workspace
        assert _run("transform", str(cfg)).exit_code == 0
        first = (out_dir / "panel_2020-01.csv").read_bytes()
        assert _run("transform", str(cfg)).exit_code == 0
        assert (out_dir / "panel_2020-01.csv").read_bytes() == first


class TestCompress:
    def test_factor_files_with_diagnostics(self, workspace, tmp_path):
        cfg, data_dir, out_dir = workspace
        cfg2 = _write_config(tmp_path, data_dir, out_dir,
                             methods="pca_linear,pca_squared")
        result = _run("compress", str(cfg2))
        assert result.exit_code == 0, result.output
        for m in ("pca_linear", "pca_squared"):
            f = pd.read_csv(out_dir / f"factors_{m}_q2.csv")
            assert list(f.columns) == ["date", "f1", "f2"]
            diag = pd.read_csv(out_dir / f"factors_{m}_q2_diag.csv")
            assert (diag["eigenvalue"] > 0).all()

    def test_autoencoder_factors_byte_identical(self, workspace, tmp_path):
        cfg, data_dir, out_dir = workspace
        cfg2 = _write_config(tmp_path, data_dir, out_dir, methods="autoencoder")
        assert _run("compress", str(cfg2)).exit_code == 0
        first = (out_dir / "factors_autoencoder_q2.csv").read_bytes()
        assert _run("compress", str(cfg2)).exit_code == 0
        assert (out_dir / "factors_autoencoder_q2.csv").read_bytes() == first


class TestForecastCommand:
    def test_dry_run_counts_cells(self, workspace):
        cfg, _, _ = workspace
        result = _run("forecast", str(cfg), "--dry-run")
        assert result.exit_code == 0
        # 1 factor cell + ar + extpc = 3 models, 2 windows, 1 horizon
        assert "3 models x 2 windows x 1 horizons = 6 cells" in result.output

    def test_full_run_and_resume(self, workspace):
        cfg, _, out_dir = workspace
        result = _run("forecast", str(cfg))
        assert result.exit_code == 0, result.output
        assert "completed 6/6 cells" in result.output
        panel = pd.read_csv(out_dir / "forecasts.csv")
        assert len(panel) == 6
        assert set(panel["model"]) == {"pca_linear-q2-const-hs", "ar-const-hs",
                                       "extpc-const-hs"}
        first = (out_dir / "forecasts.csv").read_bytes()
        # drop one cached cell; the rerun recomputes it from its own seed
        cells = sorted((out_dir / "cells").glob("*.json"))
        assert len(cells) == 6
        cells[0].unlink()
        assert _run("forecast", str(cfg)).exit_code == 0
        assert (out_dir / "forecasts.csv").read_bytes() == first


class TestDownstreamCommands:
    @pytest.fixture
    def ran_forecast(self, workspace):
        cfg, _, out_dir = workspace
        assert _run("forecast", str(cfg)).exit_code == 0
        return cfg, out_dir

    def test_evaluate_before_forecast(self, workspace):
        cfg, _, _ = workspace
        assert _run("evaluate", str(cfg)).exit_code == 2

    def test_evaluate_outputs(self, ran_forecast):
        cfg, out_dir = ran_forecast
        assert _run("evaluate", str(cfg)).exit_code == 0
        scores = pd.read_csv(out_dir / "scores.csv")
        assert {"model", "horizon", "avg_lpl", "rmse", "n_periods"} <= set(scores.columns)
        rel = pd.read_csv(out_dir / "scores_relative.csv")
        bench = rel[rel["model"] == "ar-const-hs"].iloc[0]
        assert bench["rel_lpl"] == pytest.approx(0.0, abs=1e-12)
        assert bench["rmse_ratio"] == pytest.approx(1.0, abs=1e-12)

    def test_missing_benchmark_is_runtime_error(self, ran_forecast, tmp_path):
        cfg, out_dir = ran_forecast
        import configparser

        cp = configparser.ConfigParser()
        cp.read(cfg)
        cp["evaluate"]["benchmark"] = "nonexistent-const-hs"
        bad = tmp_path / "bad.ini"
        with open(bad, "w") as fh:
            cp.write(fh)
        assert _run("evaluate", str(bad)).exit_code == 3

    def test_combine_outputs(self, ran_forecast):
        cfg, out_dir = ran_forecast
        result = _run("combine", str(cfg))
        assert result.exit_code == 0, result.output
        dma_scores = pd.read_csv(out_dir / "dma_scores.csv")
        assert len(dma_scores) >= 1
        weights = sorted(out_dir.glob("weights_*.csv"))
        assert weights
        w = pd.read_csv(weights[0])
        assert w.drop(columns="date").shape[1] == 3  # one column per pool member
        np.testing.assert_allclose(w.drop(columns="date").sum(axis=1), 1.0, atol=1e-8)

    def test_report_outputs(self, ran_forecast):
        cfg, out_dir = ran_forecast
        assert _run("compress", str(cfg)).exit_code == 0
        assert _run("combine", str(cfg)).exit_code == 0
        assert _run("report", str(cfg)).exit_code == 0
        assert (out_dir / "report_cum_log_bf.csv").exists()
        assert list(out_dir.glob("report_factors_*_long.csv"))
        assert (out_dir / "report_weights_long.csv").exists()
        bf = pd.read_csv(out_dir / "report_cum_log_bf.csv")
        bench = bf[bf["model"] == "ar-const-hs"]
        np.testing.assert_allclose(bench["cum_log_bf"], 0.0, atol=1e-12)
