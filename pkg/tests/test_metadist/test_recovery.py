import math
import os

import numpy as np
import pytest
from pydantic import ValidationError

from src.coverage.models import NetworkConfig, SirThreshold
from src.metadist.models import MetaCurve, Method
from src.metadist.recovery import (
    gil_pelaez_ccdf,
    meta_ccdf_mnatsakanov,
    meta_curve,
    mnatsakanov_cdf,
    mnatsakanov_curve,
    mnatsakanov_terms,
    mnatsakanov_weights,
)
from src.moments.kernel import MomentKernel
from src.moments.models import MomentSequence
from src.utils.errors import ConfigError

THETA_1 = SirThreshold(theta=1.0)
GRID_9 = [round(0.1 * k, 1) for k in range(1, 10)]


def _make_cfg(**overrides) -> NetworkConfig:
    data = {"lambda": 1e-4, "h": 10.0}
    data.update(overrides)
    return NetworkConfig(**data)


def _point_mass(p: float):
    """Imaginary moments of a point mass at p."""

    def moments(t: np.ndarray, _panel_end: float) -> np.ndarray:
        return np.exp(1j * t * math.log(p))

    return moments


@pytest.fixture(scope="module")
def kernel() -> MomentKernel:
    return MomentKernel(_make_cfg(), 1.0, workers=1)


# --- Gil-Pelaez ---


def test_gil_pelaez_point_mass_above_x():
    value, result = gil_pelaez_ccdf(_point_mass(0.7), 0.5, modulus=lambda t: 1.0)
    assert value == pytest.approx(1.0, abs=2e-3)
    assert result.t_end == 800.0


def test_gil_pelaez_point_mass_below_x_is_truncated(caplog):
    value, result = gil_pelaez_ccdf(_point_mass(0.7), 0.9, modulus=lambda t: 1.0)
    assert value == pytest.approx(0.0, abs=2e-3)
    assert result.t_end == 1600.0
    assert "truncated" in caplog.text


def test_gil_pelaez_rejects_reliability_outside_unit_interval():
    with pytest.raises(ValueError, match="reliability"):
        gil_pelaez_ccdf(_point_mass(0.7), 1.0)


def test_gil_pelaez_panels_see_their_own_end():
    seen = []

    def moments(t, panel_end):
        assert np.all(t <= panel_end)
        seen.append(panel_end)
        return np.exp(1j * t * math.log(0.7))

    gil_pelaez_ccdf(moments, 0.5, t_max=20.0)
    assert max(seen) == 20.0
    assert len(set(seen)) > 1


# --- Mnatsakanov ---


@pytest.mark.parametrize("mu", [5, 25, 50])
def test_mnatsakanov_point_mass_at_one_is_zero(mu):
    seq = MomentSequence(values=(1.0,) * (mu + 1), mu=mu)
    for x in (0.0, 0.3, 0.5, 0.99):
        assert mnatsakanov_cdf(seq, x) == 0.0


@pytest.mark.parametrize("mu", [5, 25, 50])
def test_mnatsakanov_point_mass_at_zero_is_one(mu):
    seq = MomentSequence(values=(1.0,) + (0.0,) * mu, mu=mu)
    for x in (0.0, 0.3, 0.5, 0.99):
        assert mnatsakanov_cdf(seq, x) == 1.0


def test_mnatsakanov_fair_bernoulli():
    seq = MomentSequence(values=(1.0,) + (0.5,) * 25, mu=25)
    assert mnatsakanov_cdf(seq, 0.5) == 0.5


def test_mnatsakanov_uniform_moments_recover_identity_cdf():
    mu = 20
    seq = MomentSequence(values=tuple(1.0 / (m + 1) for m in range(mu + 1)), mu=mu)
    # uniform P_s: S(x) = (floor(mu x) + 1) / (mu + 1)
    for x in (0.1, 0.5, 0.8):
        assert mnatsakanov_cdf(seq, x) == pytest.approx((math.floor(mu * x) + 1) / (mu + 1), abs=1e-8)


def test_mnatsakanov_roundoff_diagnostic_is_small_for_moderate_mu():
    seq = MomentSequence(values=tuple(1.0 / (m + 1) for m in range(26)), mu=25)
    exact, floating = mnatsakanov_terms(seq, 0.5)
    assert abs(exact - floating) < 1e-4


def test_mnatsakanov_weights_sum_to_zero_below_one():
    assert sum(mnatsakanov_weights(25, 0.5)) == 0
    assert mnatsakanov_weights(3, 0.0) == [1, -3, 3, -1]


def test_mnatsakanov_rejects_large_mu():
    with pytest.raises(ConfigError, match="exceeds"):
        mnatsakanov_weights(61, 0.5)


def test_mnatsakanov_curve_is_a_staircase_ccdf():
    seq = MomentSequence(values=tuple(1.0 / (m + 1) for m in range(26)), mu=25)
    curve = mnatsakanov_curve(seq, GRID_9)
    assert curve.method is Method.MNATSAKANOV
    assert all(a >= b for a, b in zip(curve.ccdf, curve.ccdf[1:]))
    assert curve.integral() == pytest.approx(0.5, abs=0.01)
    assert all("roundoff" in d for d in curve.diagnostics)


# --- engine-backed curves ---


def test_single_point_curve_matches_point_value(kernel):
    cfg = _make_cfg()
    curve = meta_curve(cfg, THETA_1, [0.5], Method.MNATSAKANOV, mu=25, kernel=kernel)
    assert curve.ccdf[0] == meta_ccdf_mnatsakanov(cfg, THETA_1, 0.5, mu=25)


def test_mnatsakanov_curve_integrates_to_first_moment(kernel):
    cfg = _make_cfg()
    grid = [k / 100 for k in range(1, 100)]
    curve = meta_curve(cfg, THETA_1, grid, "mnatsakanov", mu=25, kernel=kernel)
    assert all(a >= b - 1e-6 for a, b in zip(curve.ccdf, curve.ccdf[1:]))
    assert curve.integral() == pytest.approx(kernel.real_moment(1), abs=0.01)
    assert curve.cfg_digest == cfg.digest()


def test_vanishing_load_meta_distribution_is_one():
    cfg = _make_cfg(n_a=1, n_s=1_000_000)
    assert meta_ccdf_mnatsakanov(cfg, THETA_1, 0.5) == pytest.approx(1.0, abs=3e-3)


def test_short_gil_pelaez_agrees_with_mnatsakanov(kernel):
    cfg = _make_cfg()
    exact = meta_curve(cfg, THETA_1, [0.5], Method.GIL_PELAEZ, t_max=20.0, t_cap=20.0, workers=1, kernel=kernel)
    approx = meta_curve(cfg, THETA_1, [0.5], Method.MNATSAKANOV, mu=25, kernel=kernel)
    assert exact.sup_distance(approx) < 0.05
    assert exact.diagnostics[0]["t_end"] == 20.0


def test_low_height_curve_flags_clamped_distances():
    low = meta_curve(_make_cfg(h=0.5), THETA_1, [0.5], Method.MNATSAKANOV, mu=5)
    assert any("clamped" in w for w in low.warnings)
    tall = meta_curve(_make_cfg(), THETA_1, [0.5], Method.MNATSAKANOV, mu=5)
    assert not any("clamped" in w for w in tall.warnings)


def test_grid_validation(kernel):
    with pytest.raises(ValueError, match="strictly increasing"):
        meta_curve(_make_cfg(), THETA_1, [0.5, 0.4], kernel=kernel)
    with pytest.raises(ValueError, match="reliability"):
        meta_curve(_make_cfg(), THETA_1, [0.0, 0.5], kernel=kernel)


def test_curve_model_validation():
    with pytest.raises(ValidationError, match="mu"):
        MetaCurve(x_grid=(0.5,), ccdf=(0.5,), method=Method.MNATSAKANOV)
    with pytest.raises(ValidationError, match="outside"):
        MetaCurve(x_grid=(0.5,), ccdf=(1.5,), method=Method.GIL_PELAEZ)
    a = MetaCurve(x_grid=(0.2, 0.8), ccdf=(0.9, 0.3), method=Method.GIL_PELAEZ)
    b = MetaCurve(x_grid=(0.2, 0.8), ccdf=(0.85, 0.4), method=Method.GIL_PELAEZ)
    assert a.sup_distance(b) == pytest.approx(0.1)


@pytest.mark.slow
@pytest.mark.skipif(not os.getenv("RUN_SLOW_TESTS"), reason="full Gil-Pelaez inversion takes minutes")
def test_methods_agree_on_sparse_umi():
    cfg = _make_cfg(**{"lambda": 1e-5})
    kernel = MomentKernel(cfg, 1.0)
    exact = meta_curve(cfg, THETA_1, GRID_9, Method.GIL_PELAEZ, kernel=kernel)
    approx = meta_curve(cfg, THETA_1, GRID_9, Method.MNATSAKANOV, mu=25, kernel=kernel)
    assert exact.sup_distance(approx) <= 0.02
    assert exact.integral() == pytest.approx(kernel.real_moment(1), abs=0.01)
