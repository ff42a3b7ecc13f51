import pytest

from nlcast.config import ConfigError, load_config


def _minimal(tmp_path, data_dir, **extra):
    body = f"""\
[data]
vintage_dir = {data_dir}

[forecast]
holdout_start = 2009-01-01
holdout_end = 2009-06-01

[output]
dir = {tmp_path / 'out'}
"""
    for section, kv in extra.items():
        body += f"\n[{section}]\n" + "\n".join(f"{k} = {v}" for k, v in kv.items()) + "\n"
    cfg = tmp_path / "run.ini"
    cfg.write_text(body)
    return cfg


def test_defaults_fill_in(tmp_path, vintage_dir):
    cfg = load_config(_minimal(tmp_path, vintage_dir))
    assert cfg.target == "CPIAUCSL"
    assert cfg.q_list == [5, 15, 30]
    assert cfg.priors == ["HS", "SSVS"]
    assert cfg.horizons == [1, 3, 12]
    assert cfg.delta == 0.9
    assert cfg.mcmc.draws == 10000 and cfg.mcmc.burn == 2000


def test_missing_required_key(tmp_path, vintage_dir):
    cfg_path = _minimal(tmp_path, vintage_dir)
    body = cfg_path.read_text().replace("holdout_start = 2009-01-01\n", "")
    cfg_path.write_text(body)
    with pytest.raises(ConfigError, match="holdout_start"):
        load_config(cfg_path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_nonexistent_data_dir(tmp_path):
    with pytest.raises(ConfigError, match="data directory"):
        load_config(_minimal(tmp_path, tmp_path / "nope"))


def test_unknown_method_rejected(tmp_path, vintage_dir):
    with pytest.raises(ConfigError, match="umap"):
        load_config(_minimal(tmp_path, vintage_dir, grid={"methods": "umap"}))


def test_unknown_prior_rejected(tmp_path, vintage_dir):
    with pytest.raises(ConfigError, match="LASSO"):
        load_config(_minimal(tmp_path, vintage_dir, grid={"priors": "lasso"}))


def test_env_overrides_paths(tmp_path, vintage_dir, monkeypatch):
    other = tmp_path / "elsewhere"
    other.mkdir()
    monkeypatch.setenv("NLCAST_DATA_DIR", str(other))
    cfg = load_config(_minimal(tmp_path, vintage_dir))
    assert cfg.data_dir == other


def test_case_normalization(tmp_path, vintage_dir):
    cfg = load_config(_minimal(tmp_path, vintage_dir,
                               grid={"priors": "hs", "modes": "TVP"}))
    assert cfg.priors == ["HS"]
    assert cfg.modes == ["tvp"]
