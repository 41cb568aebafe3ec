import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from sonine.errors import AccuracyError, DomainError
from sonine.models import SpecFunConfig
from sonine.specfun import (
    convolution_e1_f,
    e1_mass,
    exp_integral_e1,
    laplace_numeric,
    lower_incomplete_gamma,
    regularized_p,
    volterra_f,
    volterra_f_report,
    volterra_interpolant,
    volterra_mass,
)

from tests.conftest import mp_e1, mp_volterra


def test_e1_at_one():
    assert exp_integral_e1(1.0) == pytest.approx(0.21938393439552, rel=1e-12)


def test_e1_bracket_at_ten():
    v = exp_integral_e1(10.0)
    assert math.exp(-10.0) / 11.0 <= v <= math.exp(-10.0) / 10.0


def test_e1_decreasing():
    assert exp_integral_e1(0.5) > exp_integral_e1(0.6)


def test_e1_against_series_oracle():
    xs = np.logspace(-3, np.log10(30.0), 40)
    values = exp_integral_e1(xs)
    oracle = np.array([mp_e1(x) for x in xs])
    np.testing.assert_allclose(values, oracle, rtol=1e-10)


def test_z_e1_below_exp():
    z = np.logspace(-4, np.log10(50.0), 200)
    assert np.all(z * exp_integral_e1(z) <= np.exp(-z))


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_e1_domain(bad):
    with pytest.raises(DomainError):
        exp_integral_e1(bad)


def test_lower_incomplete_gamma_closed_forms():
    assert lower_incomplete_gamma(1.0, 1.0) == pytest.approx(0.63212055882856, rel=1e-12)
    assert lower_incomplete_gamma(2.0, 1.0) == pytest.approx(0.26424111765712, rel=1e-12)


def test_lower_incomplete_gamma_oracle():
    oracle = float(mpmath.gammainc(0.5, 0, 0.25))
    assert lower_incomplete_gamma(0.5, 0.25) == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize("s, x", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
def test_lower_incomplete_gamma_domain(s, x):
    with pytest.raises(DomainError):
        lower_incomplete_gamma(s, x)


def test_regularized_p_limits():
    assert regularized_p(1.0, 1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)
    assert abs(regularized_p(3.0, 50.0) - 1.0) <= 1e-12


def test_regularized_p_derivative():
    h = 1e-4
    fd = (regularized_p(2.0, 1.0 + h) - regularized_p(2.0, 1.0 - h)) / (2 * h)
    assert fd == pytest.approx(math.exp(-1.0), rel=1e-7)


@settings(max_examples=50, deadline=None)
@given(s=st.floats(min_value=0.1, max_value=20.0), x=st.floats(min_value=0.01, max_value=40.0))
def test_regularized_p_in_unit_interval_and_monotone(s, x):
    p = regularized_p(s, x)
    assert 0.0 < p <= 1.0
    assert regularized_p(s, x * 1.01) >= p


def test_e1_mass_closed_form():
    assert e1_mass(1.0) == pytest.approx(1.0 + special.exp1(1.0) - math.exp(-1.0), rel=1e-14)
    assert e1_mass(0.0) == 0.0


def test_volterra_f_oracle():
    assert volterra_f(2.0) == pytest.approx(mp_volterra(2.0), rel=1e-10)


@pytest.mark.parametrize("lam", [1e-6, 0.01, 0.5, 7.0, 150.0])
def test_volterra_f_against_extended_precision(lam):
    assert volterra_f(lam) == pytest.approx(mp_volterra(lam), rel=1e-9)


def test_volterra_f_vectorized_shape():
    lam = np.array([[0.5, 1.0], [2.0, 3.0]])
    values = volterra_f(lam)
    assert values.shape == (2, 2)
    assert np.all(values > 0.0)


def test_volterra_f_domain():
    with pytest.raises(DomainError):
        volterra_f(0.0)


def test_volterra_report_records_window():
    report = volterra_f_report(2.0)
    assert report.t_lo <= report.t_hi
    assert report.value == pytest.approx(volterra_f(2.0), rel=1e-14)
    assert report.right_tail_bound <= 1e-10 * report.value
    assert report.nodes > 0


def test_volterra_tail_cutoff_is_enforced():
    config = SpecFunConfig(tail_cutoff=5.0)
    with pytest.raises(AccuracyError):
        volterra_f(100.0, config)


def test_interpolant_matches_direct_evaluation():
    lam = np.logspace(-12, 2.5, 57)
    np.testing.assert_allclose(volterra_interpolant()(lam), volterra_f(lam), rtol=1e-8)


def test_interpolant_falls_back_outside_table():
    lam = np.array([1e-17, 900.0])
    np.testing.assert_allclose(volterra_interpolant()(lam), volterra_f(lam), rtol=1e-14)


def test_volterra_mass_matches_quadrature():
    inner = integrate.quad(volterra_f, 0.1, 0.5, epsabs=0.0, epsrel=1e-11)[0]
    assert volterra_mass(0.5) - volterra_mass(0.1) == pytest.approx(inner, rel=1e-8)


def test_volterra_mass_derivative_is_f():
    h = 1e-4
    fd = (volterra_mass(0.3 + h) - volterra_mass(0.3 - h)) / (2 * h)
    assert fd == pytest.approx(volterra_f(0.3), rel=1e-6)


def test_laplace_of_constant():
    assert laplace_numeric(lambda t: np.ones_like(t), 2.0) == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 3.0, 5.0])
def test_laplace_of_e1(lam):
    assert laplace_numeric(special.exp1, lam, left_mass=e1_mass) == pytest.approx(
        math.log1p(lam) / lam, abs=1e-6)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0])
def test_laplace_of_volterra(lam):
    value = laplace_numeric(volterra_interpolant(), lam, left_mass=volterra_mass)
    assert value == pytest.approx(1.0 / math.log1p(lam), abs=1e-4)


def test_e1_volterra_convolution_is_one():
    z = np.linspace(0.1, 0.9, 9)
    np.testing.assert_allclose(convolution_e1_f(z), 1.0, atol=1e-5)
    assert convolution_e1_f(0.7) == pytest.approx(1.0, abs=1e-5)
