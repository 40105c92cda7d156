import logging
import math

import pytest

from src.cli.config import CONFIG_KEYS, RunConfig, parse_config, parse_grid, read_config_file
from src.coverage.probability import interference_radius
from src.utils.errors import ConfigError


def _flags(**values):
    return dict(values)


# --- grids ---


def test_parse_grid_range_includes_stop():
    grid = parse_grid("1:100:1")
    assert len(grid) == 100
    assert grid[0] == 1.0 and grid[-1] == 100.0


def test_parse_grid_fractional_step():
    grid = parse_grid("0.1:0.9:0.1")
    assert len(grid) == 9
    assert grid[-1] == pytest.approx(0.9)


def test_parse_grid_list():
    assert parse_grid("1e-5, 5e-5,1e-4") == (1e-5, 5e-5, 1e-4)


@pytest.mark.parametrize("text", ["1:2", "5:1:1", "1:2:0", ""])
def test_parse_grid_rejects_malformed(text):
    with pytest.raises(ValueError):
        parse_grid(text)


# --- parse_config ---


def test_db_threshold_converted_to_linear():
    run = parse_config("coverage", _flags(deployment="umi", **{"lambda": 1e-4}, h=10.0, theta_db=0.0))
    assert run.theta == 1.0
    assert run.metric.theta == 1.0
    assert run.network().lambda_ == 1e-4


def test_constraint_violation_names_invariant():
    with pytest.raises(ConfigError, match="1 <= n_a <= n_s"):
        parse_config("coverage", _flags(n_a=3, n_s=2))


def test_out_of_range_density_only_warns(caplog):
    with caplog.at_level(logging.WARNING):
        run = parse_config("coverage", _flags(deployment="uma", **{"lambda": 1e-3}))
    assert run.network().env.deployment.value == "uma"
    assert "outside" in caplog.text


def test_unknown_file_key_lists_valid_keys(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("lambda = 1e-4\nheight = 10\n")
    with pytest.raises(ConfigError, match="valid keys: deployment"):
        parse_config("coverage", {}, path)


def test_missing_config_file():
    with pytest.raises(ConfigError, match="cannot read"):
        read_config_file("/nonexistent/run.cfg")


def test_malformed_config_line(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("lambda 1e-4\n")
    with pytest.raises(ConfigError, match="expected key=value"):
        read_config_file(path)


def test_precedence_file_env_flags(tmp_path, monkeypatch):
    path = tmp_path / "run.cfg"
    path.write_text("# reference point\nlambda = 5e-5\nh = 25  # meters\nmu = 12\n")
    monkeypatch.setenv("METADIST_H", "30")
    run = parse_config("moments", _flags(h=None), path)
    assert run.lambda_ == 5e-5
    assert run.h == 30.0
    assert run.mu == 12
    run = parse_config("moments", _flags(h=40.0), path)
    assert run.h == 40.0


def test_metric_selection():
    assert parse_config("rate", _flags(r_o=8e6)).metric.kind == "rate"
    assert parse_config("meta", _flags(theta_db=-3.0)).metric.theta == pytest.approx(10 ** -0.3)
    with pytest.raises(ConfigError, match="exactly one metric"):
        parse_config("meta", _flags(theta_db=0.0, r_o=8e6))
    with pytest.raises(ConfigError, match="rate needs r_o"):
        parse_config("rate", {})


def test_sweep_requires_axis_and_grid():
    with pytest.raises(ConfigError, match="nonempty grid"):
        parse_config("sweep", _flags(axis="h"))
    with pytest.raises(ConfigError, match="unknown sweep axis"):
        parse_config("sweep", _flags(axis="width", grid="1,2"))
    run = parse_config("sweep", _flags(axis="h", grid="1:100:1", theta_db=0.0, r_o=5e6))
    assert len(run.grid) == 100


def test_bad_type_becomes_config_error():
    with pytest.raises(ConfigError, match="mu"):
        parse_config("moments", _flags(mu="many"))


def test_metadata_pairs_reproduce_the_run(tmp_path):
    run = parse_config(
        "meta",
        _flags(**{"lambda": 1e-5}, h=12.5, theta_db=-3.0, x_grid="0.2,0.4", method="gil-pelaez", seed=7),
    )
    pairs = run.as_pairs()
    assert {key for key, _ in pairs} <= set(CONFIG_KEYS)
    assert "workers" not in dict(pairs)
    path = tmp_path / "replay.cfg"
    path.write_text("".join(f"{key}={value}\n" for key, value in pairs))
    assert parse_config("meta", {}, path) == run


def test_run_config_rejects_empty_lists():
    with pytest.raises(ValueError, match="x_grid is empty"):
        RunConfig(command="meta", x_grid=())


def test_window_factor_reaches_network_config():
    run = parse_config("simulate", _flags(window_factor=200.0, tail_fraction=0.5))
    cfg = run.network()
    assert (cfg.window_factor, cfg.tail_fraction) == (200.0, 0.5)
    assert interference_radius(cfg) == pytest.approx(200.0 / math.sqrt(math.pi * 1e-4))
    assert cfg.digest() != parse_config("simulate", {}).network().digest()
    assert dict(run.as_pairs())["window_factor"] == "200.0"


def test_window_factor_must_be_positive():
    with pytest.raises(ConfigError, match="window_factor"):
        parse_config("simulate", _flags(window_factor=0.0))
