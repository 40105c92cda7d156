import math

import numpy as np
import pytest

from src.coverage.models import NetworkConfig, RateThreshold, SirThreshold
from src.coverage.probability import (
    coverage_probability,
    eta,
    interference_radius,
    laplace_factor,
    metric_coverage,
    one_minus_eta,
    rate_coverage_probability,
    rate_to_sir_threshold,
    serving_range,
)
from src.propagation.models import env_preset
from src.utils.errors import ConfigError

UMI = env_preset("umi")


def _make_cfg(**overrides) -> NetworkConfig:
    data = {"lambda": 1e-4, "h": 10.0}
    data.update(overrides)
    return NetworkConfig(**data)


# --- thresholds ---


def test_rate_threshold_of_one_bit_per_hz_is_unity():
    assert rate_to_sir_threshold(2e6, 10, 2e7) == pytest.approx(1.0, rel=1e-15)


def test_rate_threshold_direct_value():
    assert rate_to_sir_threshold(5e6, 10, 2e7) == pytest.approx(2**2.5 - 1, rel=1e-14)
    assert rate_to_sir_threshold(5e6, 10, 2e7) == pytest.approx(4.657, abs=1e-3)


def test_rate_threshold_vanishes_with_rate():
    assert rate_to_sir_threshold(1e-3, 1, 2e7) < 1e-10


def test_rate_threshold_rejects_overflow():
    with pytest.raises(ConfigError, match="non-physical"):
        rate_to_sir_threshold(1e10, 10, 2e7)


def test_rate_threshold_rejects_nonpositive_inputs():
    with pytest.raises(ConfigError):
        rate_to_sir_threshold(0.0, 1, 2e7)


# --- kernel ---


def test_eta_is_one_without_interference_scaling():
    assert eta(0.0, 100.0, 10.0, UMI, 2.0) == 1.0


def test_eta_decreases_to_zero_in_s():
    values = [eta(s, 100.0, 10.0, UMI, 2.0) for s in (1.0, 1e6, 1e9, 1e18)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-6
    assert 0.0 < eta(1.0, 100.0, 10.0, UMI, 2.0) <= 1.0


def test_eta_rejects_bad_arguments():
    with pytest.raises(ValueError):
        eta(-1.0, 100.0, 10.0, UMI, 2.0)
    with pytest.raises(ValueError):
        eta(1.0, 0.0, 10.0, UMI, 2.0)


def test_one_minus_eta_matches_direct_kernel():
    cfg = _make_cfg()
    r = np.array([5.0, 50.0, 100.0, 800.0])
    for s in (1e3, 1e7, 1e9):
        direct = 1.0 - eta(s, r, cfg.h, cfg.env, cfg.f)
        stable = one_minus_eta(math.log(s), np.hypot(cfg.h, r), cfg)
        assert stable == pytest.approx(direct, rel=1e-9, abs=1e-15)


def test_interference_radius_is_tail_driven_at_urban_density():
    cfg = _make_cfg()
    r_med = math.sqrt(math.log(2.0) / (math.pi * 1e-4))
    assert interference_radius(cfg) == pytest.approx(r_med * 1e-3 ** (-1 / 1.5), rel=1e-12)
    assert interference_radius(cfg) == pytest.approx(4697.0, rel=1e-3)


def test_interference_radius_floor_applies_for_tiny_tail():
    cfg = _make_cfg(tail_fraction=0.5, window_factor=50.0)
    assert interference_radius(cfg) == pytest.approx(50.0 / math.sqrt(math.pi * 1e-4))


def test_serving_range_covers_overhead_to_cutoff():
    d_lo, d_hi = serving_range(_make_cfg())
    assert d_lo == 10.0
    assert d_hi == pytest.approx(math.hypot(10.0, math.sqrt(-math.log(1e-12) / (math.pi * 1e-4))))
    d_lo, _ = serving_range(_make_cfg(h=0.0))
    assert 0.0 < d_lo < 1e-2


def test_laplace_factor_trivial_limits():
    cfg = _make_cfg()
    assert laplace_factor(50.0, 0.0, cfg) == 1.0
    sparse = _make_cfg(**{"lambda": 1e-9})
    assert laplace_factor(50.0, 1.0, sparse) > 0.999


def test_laplace_factor_is_a_probability_and_monotone():
    cfg = _make_cfg()
    values = [laplace_factor(50.0, s, cfg) for s in (1e3, 1e6, 1e8, 1e10)]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_laplace_factor_rejects_bad_arguments():
    with pytest.raises(ValueError):
        laplace_factor(0.0, 1.0, _make_cfg())
    with pytest.raises(ValueError):
        laplace_factor(10.0, -1.0, _make_cfg())


# --- coverage ---


def test_coverage_near_one_for_tiny_threshold():
    assert coverage_probability(_make_cfg(), 1e-6) > 0.99


def test_coverage_decreases_with_threshold():
    cfg = _make_cfg()
    p1 = coverage_probability(cfg, 1.0)
    p2 = coverage_probability(cfg, 2.0)
    assert 0.0 < p2 < p1 < 1.0


def test_coverage_decreases_with_load():
    light = coverage_probability(_make_cfg(n_a=1, n_s=4), 1.0)
    full = coverage_probability(_make_cfg(n_a=4, n_s=4), 1.0)
    assert light > full


def test_coverage_depends_on_load_ratio_only():
    a = coverage_probability(_make_cfg(n_a=1, n_s=2), 1.0)
    b = coverage_probability(_make_cfg(n_a=2, n_s=4), 1.0)
    assert a == pytest.approx(b, abs=1e-9)


def test_rate_coverage_is_not_ratio_invariant():
    a = rate_coverage_probability(_make_cfg(n_a=1, n_s=2), 4e6)
    b = rate_coverage_probability(_make_cfg(n_a=2, n_s=4), 4e6)
    assert a > b


def test_rate_coverage_reduces_to_sir_coverage():
    cfg = _make_cfg(n_s=2, n_a=1)
    theta = rate_to_sir_threshold(8e6, cfg.n_s, cfg.w)
    assert rate_coverage_probability(cfg, 8e6) == coverage_probability(cfg, theta)
    assert metric_coverage(cfg, RateThreshold(r_o=8e6)) == coverage_probability(cfg, theta)
    assert metric_coverage(cfg, SirThreshold(theta=theta)) == coverage_probability(cfg, theta)


def test_rate_coverage_near_one_for_tiny_rate():
    assert rate_coverage_probability(_make_cfg(), 1.0) > 0.99


def test_coverage_rejects_nonpositive_threshold():
    with pytest.raises(ValueError):
        coverage_probability(_make_cfg(), 0.0)
