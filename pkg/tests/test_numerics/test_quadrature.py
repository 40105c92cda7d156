import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import trapezoid

from src.numerics.quadrature import (
    QuadratureSpec,
    gauss_legendre_panels,
    gil_pelaez_integral,
    integrate_interval,
    integrate_semi_infinite,
)
from src.utils.errors import ConvergenceError, NumericalError

# (integrand on [0, inf), exact value)
_CLOSED_FORM = [
    (lambda r: np.exp(-r), 1.0),
    (lambda r: np.exp(-2.0 * r), 0.5),
    (lambda r: r * np.exp(-r), 1.0),
    (lambda r: r**2 * np.exp(-r), 2.0),
    (lambda r: np.exp(-(r**2)), math.sqrt(math.pi) / 2),
    (lambda r: r * np.exp(-(r**2)), 0.5),
    (lambda r: np.exp(-r) * np.sin(r), 0.5),
    (lambda r: 1.0 / (1.0 + r) ** 2, 1.0),
    (lambda r: 1.0 / (1.0 + r) ** 3, 0.5),
    (lambda r: 1.0 / (1.0 + r**2), math.pi / 2),
]


def test_spec_defaults():
    spec = QuadratureSpec()
    assert spec.rel_tol == 1e-6
    assert spec.abs_tol == 1e-10
    assert spec.tail_cutoff == 1e-10


def test_spec_rejects_invalid_fields():
    with pytest.raises(ValidationError, match="rel_tol"):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValidationError, match="tail_cutoff"):
        QuadratureSpec(tail_cutoff=1.0)
    with pytest.raises(ValidationError, match="max_subdivisions"):
        QuadratureSpec(max_subdivisions=0)


def test_exponential_integrates_to_one():
    result = integrate_semi_infinite(lambda r: np.exp(-r), 0.0)
    assert result.value == pytest.approx(1.0, rel=1e-6)


def test_nearest_distance_density_normalizes():
    lam = 1e-4
    pdf = lambda r: 2 * math.pi * lam * r * np.exp(-math.pi * lam * r**2)
    result = integrate_semi_infinite(pdf, 0.0, scale=1 / math.sqrt(math.pi * lam))
    assert result.value == pytest.approx(1.0, rel=1e-6)


def test_nearest_distance_density_with_unit_scale():
    lam = 1e-4
    pdf = lambda r: 2 * math.pi * lam * r * np.exp(-math.pi * lam * r**2)
    assert integrate_semi_infinite(pdf, 0.0).value == pytest.approx(1.0, rel=1e-5)


def test_complex_integrand_matches_fine_trapezoid():
    f = lambda r: r * np.exp(-(r**2)) * np.exp(1j * r)
    grid = np.linspace(0.0, 12.0, 1_000_001)
    reference = trapezoid(f(grid), grid)
    result = integrate_semi_infinite(f, 0.0)
    assert isinstance(result.value, complex)
    assert abs(result.value - reference) < 1e-6


@pytest.mark.parametrize("rel_tol", [1e-4, 1e-6, 1e-8])
def test_error_estimate_brackets_true_error(rel_tol):
    spec = QuadratureSpec(rel_tol=rel_tol, abs_tol=0.0)
    for f, exact in _CLOSED_FORM:
        result = integrate_semi_infinite(f, 0.0, spec)
        assert abs(result.value - exact) <= result.error + 1e-14 * abs(exact)
        assert abs(result.value - exact) <= 10 * rel_tol * abs(exact)


def test_complex_path_reduces_to_real_path():
    f = lambda r: np.exp(-r) / (1.0 + r)
    real = integrate_semi_infinite(f, 0.0)
    cplx = integrate_semi_infinite(lambda r: f(r) + 0j, 0.0)
    assert cplx.value.real == real.value
    assert cplx.value.imag == 0.0
    assert cplx.subdivisions == real.subdivisions


def test_interval_reversed_limits_flip_sign():
    f = lambda x: x**2
    assert integrate_interval(f, 0.0, 3.0).value == pytest.approx(9.0)
    assert integrate_interval(f, 3.0, 0.0).value == pytest.approx(-9.0)
    assert integrate_interval(f, 1.0, 1.0).value == 0.0


def test_non_convergence_carries_best_estimate():
    spec = QuadratureSpec(rel_tol=1e-12, abs_tol=0.0, max_subdivisions=3)
    with pytest.raises(ConvergenceError) as excinfo:
        integrate_interval(lambda x: np.sin(1.0 / (x + 1e-3)), 0.0, 1.0, spec)
    assert excinfo.value.estimate is not None
    assert excinfo.value.error_bound > 0


def test_non_finite_integrand_rejected():
    with pytest.raises(NumericalError, match="non-finite"):
        integrate_interval(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_zero_integrand_short_circuits():
    result = integrate_semi_infinite(lambda r: np.zeros_like(r), 5.0)
    assert result.value == 0.0
    assert result.evaluations == 0


def test_gauss_legendre_panels_integrate_polynomial_exactly():
    nodes, weights = gauss_legendre_panels(0.0, 2.0, n_panels=3, order=10)
    assert nodes.shape == (30,)
    assert np.sum(weights * nodes**7) == pytest.approx(2.0**8 / 8, rel=1e-13)


def test_gauss_legendre_panels_row_wise():
    lo = np.array([0.0, 1.0])
    hi = np.array([1.0, 3.0])
    nodes, weights = gauss_legendre_panels(lo, hi, n_panels=2, order=5)
    assert nodes.shape == (2, 10)
    assert np.sum(weights, axis=-1) == pytest.approx([1.0, 2.0])
    assert np.all(weights > 0)


# --- Gil-Pelaez ---


def _gp_ccdf(moment, x, **kwargs):
    log_x = math.log(x)
    g = lambda t: np.imag(np.exp(-1j * t * log_x) * moment(t)) / t
    result = gil_pelaez_integral(g, log_x=log_x, modulus=lambda t: abs(moment(np.array([t]))[0]), **kwargs)
    return 0.5 + result.value / math.pi, result


def test_point_mass_above_threshold():
    point_mass = lambda t: np.exp(1j * t * math.log(0.7))
    ccdf, result = _gp_ccdf(point_mass, 0.5)
    assert ccdf == pytest.approx(1.0, abs=1e-2)
    # |M| never decays; the range doubles until the tail bound drops below 1e-3
    assert result.t_end == pytest.approx(800.0)
    assert result.modulus_at_end == pytest.approx(1.0)


def test_point_mass_below_threshold():
    point_mass = lambda t: np.exp(1j * t * math.log(0.7))
    ccdf, _ = _gp_ccdf(point_mass, 0.9)
    assert ccdf == pytest.approx(0.0, abs=1e-2)


def test_beta_2_2_median():
    # E[X^{jt}] for X ~ Beta(2, 2)
    beta_moment = lambda t: 6.0 / ((2.0 + 1j * t) * (3.0 + 1j * t))
    ccdf, result = _gp_ccdf(beta_moment, 0.5)
    assert ccdf == pytest.approx(0.5, abs=1e-3)
    assert result.t_end == 200.0


def test_beta_2_2_off_median():
    beta_moment = lambda t: 6.0 / ((2.0 + 1j * t) * (3.0 + 1j * t))
    ccdf, _ = _gp_ccdf(beta_moment, 0.3)
    # CCDF of Beta(2,2): 1 - (3x^2 - 2x^3)
    assert ccdf == pytest.approx(1 - (3 * 0.09 - 2 * 0.027), abs=1e-3)


def test_gil_pelaez_result_independent_of_workers():
    beta_moment = lambda t: 6.0 / ((2.0 + 1j * t) * (3.0 + 1j * t))
    serial, _ = _gp_ccdf(beta_moment, 0.4, workers=1)
    parallel, _ = _gp_ccdf(beta_moment, 0.4, workers=4)
    assert serial == parallel


def test_gil_pelaez_rejects_unit_reliability():
    with pytest.raises(ValueError, match="log x"):
        gil_pelaez_integral(lambda t: t, log_x=0.0)
