import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.propagation.models import AbgParams, Deployment, Environment, LinkType, env_preset
from src.propagation.pathloss import (
    D_MIN,
    clamp_warning,
    crossover_distance,
    db_to_linear,
    linear_to_db,
    los_probability,
    nlos_probability,
    path_gain,
    pathloss_db,
)

UMI = env_preset("umi")


# --- presets ---


def test_umi_preset_matches_table():
    env = env_preset(Deployment.UMI)
    assert env.los == AbgParams(alpha=2.0, beta=31.4, gamma=2.1)
    assert env.nlos == AbgParams(alpha=3.5, beta=24.4, gamma=1.9)
    assert env.density_range == (1e-5, 1e-3)


def test_uma_preset_matches_table():
    env = env_preset("UMa")
    assert env.los == AbgParams(alpha=2.8, beta=11.4, gamma=2.3)
    assert env.nlos == AbgParams(alpha=3.3, beta=17.6, gamma=2.0)
    assert env.density_range == (1e-7, 1e-5)


def test_presets_default_to_urban_los_constants():
    for name in ("umi", "uma"):
        env = env_preset(name)
        assert (env.a, env.b) == (9.6, 0.28)


def test_preset_overrides_a_b():
    env = env_preset("uma", a=4.88, b=0.43)
    assert (env.a, env.b) == (4.88, 0.43)


def test_environment_rejects_bad_constants():
    with pytest.raises(ValidationError, match="a must be > 0"):
        Environment(los=UMI.los, nlos=UMI.nlos, a=0.0)
    with pytest.raises(ValidationError, match="min < max"):
        Environment(los=UMI.los, nlos=UMI.nlos, density_range=(1e-3, 1e-5))


def test_abg_params_reject_nonpositive_alpha():
    with pytest.raises(ValidationError, match="alpha"):
        AbgParams(alpha=0.0, beta=30.0, gamma=2.0)


def test_unknown_deployment_rejected():
    with pytest.raises(ValueError):
        env_preset("rural")


# --- LoS probability ---


def test_los_probability_ground_level():
    assert los_probability(0.0, 100.0, UMI) == pytest.approx(0.00699, abs=1e-4)
    assert los_probability(0.0, 100.0, UMI) == pytest.approx(1 / (1 + 9.6 * math.exp(0.28 * 9.6)), rel=1e-12)


def test_los_probability_at_45_degrees():
    assert los_probability(100.0, 100.0, UMI) == pytest.approx(0.99953, abs=1e-5)


def test_los_probability_overhead_limit():
    expected = 1 / (1 + 9.6 * math.exp(-0.28 * 80.4))
    assert los_probability(10.0, 0.0, UMI) == pytest.approx(expected, rel=1e-12)
    assert los_probability(10.0, 0.0, UMI) > 0.9999


def test_los_probability_origin_is_domain_error():
    with pytest.raises(ValueError, match="undefined"):
        los_probability(0.0, 0.0, UMI)


def test_los_probability_rejects_negative_inputs():
    with pytest.raises(ValueError):
        los_probability(-1.0, 10.0, UMI)


def test_los_probability_monotone_in_h_and_r():
    h = np.linspace(1.0, 100.0, 50)
    assert np.all(np.diff(los_probability(h, 80.0, UMI)) > 0)
    r = np.linspace(1.0, 400.0, 50)
    assert np.all(np.diff(los_probability(25.0, r, UMI)) < 0)


def test_los_and_nlos_probabilities_sum_to_one():
    r = np.array([1.0, 10.0, 100.0, 1000.0])
    total = los_probability(10.0, r, UMI) + nlos_probability(10.0, r, UMI)
    assert np.all(total == 1.0)


# --- path loss ---


def test_pathloss_reduces_to_beta_at_unit_distance_and_frequency():
    assert pathloss_db(1.0, 0.0, LinkType.LOS, UMI, 1.0) == pytest.approx(31.4, abs=1e-12)


def test_pathloss_umi_at_100m_2ghz():
    assert pathloss_db(0.0, 100.0, LinkType.LOS, UMI, 2.0) == pytest.approx(77.72, abs=5e-3)
    assert pathloss_db(0.0, 100.0, LinkType.NLOS, UMI, 2.0) == pytest.approx(100.12, abs=5e-3)


def test_pathloss_rejects_nonpositive_frequency():
    with pytest.raises(ValueError, match="carrier frequency"):
        pathloss_db(10.0, 10.0, LinkType.LOS, UMI, 0.0)


def test_pathloss_clamps_below_minimum_distance(caplog):
    with caplog.at_level(logging.WARNING, logger="src.propagation.pathloss"):
        value = pathloss_db(0.3, 0.2, LinkType.LOS, UMI, 1.0)
    assert value == pytest.approx(31.4)
    assert "clamped" in caplog.text


def test_clamp_warning_only_below_minimum_height():
    assert "clamped" in clamp_warning(0.5)
    assert clamp_warning(D_MIN) is None
    assert clamp_warning(10.0) is None


def test_path_gain_of_beta_only_loss():
    assert path_gain(1.0, 0.0, "los", UMI, 1.0) == pytest.approx(7.244e-4, rel=1e-3)


def test_path_gain_decreases_with_distance():
    assert path_gain(10.0, 100.0, LinkType.LOS, UMI, 2.0) > path_gain(10.0, 200.0, LinkType.LOS, UMI, 2.0)
    r = np.linspace(1.0, 1000.0, 200)
    assert np.all(np.diff(path_gain(10.0, r, LinkType.NLOS, UMI, 2.0)) < 0)


def test_db_round_trip():
    x = np.array([-40.0, -3.0, 0.0, 7.5, 120.0])
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)
    assert db_to_linear(0.0) == 1.0


def test_crossover_orders_los_and_nlos_gain():
    d0 = crossover_distance(UMI, 2.0)
    assert d0 == pytest.approx(3.21, abs=0.01)
    below, above = d0 / 1.5, d0 * 3.0
    assert path_gain(0.0, below, LinkType.NLOS, UMI, 2.0) > path_gain(0.0, below, LinkType.LOS, UMI, 2.0)
    assert path_gain(0.0, above, LinkType.LOS, UMI, 2.0) > path_gain(0.0, above, LinkType.NLOS, UMI, 2.0)


def test_crossover_none_for_parallel_lines():
    params = AbgParams(alpha=3.0, beta=30.0, gamma=2.0)
    env = Environment(los=params, nlos=AbgParams(alpha=3.0, beta=40.0, gamma=2.0))
    assert crossover_distance(env, 2.0) is None
