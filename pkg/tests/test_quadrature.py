import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonine.errors import DerivativeError, DomainError, QuadratureError
from sonine.models import SingularSpec
from sonine.quadrature import (
    differentiate,
    differentiate_with_error,
    extrapolate_to_endpoint,
    grading_depth,
    integrate_many,
    integrate_singular,
)

from tests.conftest import mp_beta


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("q", [0.3, 0.5, 0.7])
def test_beta_integrals(p, q):
    spec = SingularSpec(left_exponent=1.0 - p, right_exponent=1.0 - q)
    batch = integrate_many(lambda t, dl, dr, idx: dl ** (p - 1.0) * dr ** (q - 1.0), 0.0, 1.0, spec, 1e-12)
    assert batch.converged[0]
    assert batch.values[0] == pytest.approx(mp_beta(p, q), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(min_value=0.05, max_value=0.95))
def test_power_singularity_at_left_endpoint(p):
    spec = SingularSpec(left_exponent=1.0 - p)
    batch = integrate_many(lambda t, dl, dr, idx: dl ** (p - 1.0), 0.0, 1.0, spec, 1e-11)
    assert batch.values[0] == pytest.approx(1.0 / p, rel=1e-9)


def test_log_singularity():
    result = integrate_singular(lambda t: -np.log(t), 0.0, 1.0, SingularSpec(left_log=True), tol=1e-11)
    assert result.converged
    assert result.value == pytest.approx(1.0, abs=1e-9)


def test_log_singularity_with_cap():
    spec = SingularSpec(left_log=True)

    def cap(eps, idx):
        return eps * (1.0 - np.log(eps))

    batch = integrate_many(lambda t, dl, dr, idx: -np.log(dl), 0.0, 1.0, spec, 1e-11, left_cap=cap)
    assert batch.values[0] == pytest.approx(1.0, abs=1e-10)


def test_batch_of_intervals_with_owner_index():
    b = np.array([0.5, 1.0, 2.0, 3.0])
    scale = np.array([1.0, 2.0, 3.0, 4.0])
    batch = integrate_many(lambda t, dl, dr, idx: scale[idx] * t ** 2, np.zeros(4), b, tol=1e-12)
    np.testing.assert_allclose(batch.values, scale * b ** 3 / 3.0, rtol=1e-12)
    assert batch.converged.all()
    assert np.all(batch.evaluations >= 30)


def test_gaps_are_exact_near_far_endpoint():
    # gap to b stays representable although b - t underflows relative to b
    spec = SingularSpec(right_exponent=0.5)
    a, b = 1e8, 1e8 + 1e-4
    batch = integrate_many(lambda t, dl, dr, idx: dr ** -0.5, a, b, spec, 1e-12)
    assert batch.values[0] == pytest.approx(2.0 * math.sqrt(b - a), rel=1e-9)


@pytest.mark.parametrize("a", [1.0 - 1e-15, 0.5])
def test_nodes_never_land_on_singular_right_endpoint(a):
    spec = SingularSpec(right_exponent=0.5)
    batch = integrate_many(lambda t, dl, dr, idx: np.where(t < 1.0, dr ** -0.5, np.nan), a, 1.0, spec, 1e-12)
    assert batch.values[0] == pytest.approx(2.0 * math.sqrt(1.0 - a), rel=1e-8)


def test_interval_without_interior_float_is_zero():
    def f(t, dl, dr, idx):
        raise AssertionError("integrand called on an empty interval")

    batch = integrate_many(f, np.nextafter(1.0, 0.0), 1.0)
    assert batch.values[0] == 0.0
    assert batch.evaluations[0] == 0


def test_zero_length_interval_is_zero():
    batch = integrate_many(lambda t, dl, dr, idx: np.ones_like(t), np.array([0.3, 0.0]), np.array([0.3, 1.0]))
    assert batch.values[0] == 0.0
    assert batch.values[1] == pytest.approx(1.0)
    assert batch.converged.all()


def test_reversed_limits_rejected():
    with pytest.raises(DomainError):
        integrate_many(lambda t, dl, dr, idx: t, 1.0, 0.0)


def test_degenerate_scalar_interval_rejected():
    with pytest.raises(DomainError):
        integrate_singular(np.cos, 0.5, 0.5)


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_singular(lambda t: np.where(t < 0.5, np.nan, 1.0), 0.0, 1.0)


def test_grading_depth():
    assert grading_depth(1e-10) == 13
    assert grading_depth(0.5) == 1


def test_derivative_of_sine():
    x = np.linspace(-2.0, 2.0, 9)
    np.testing.assert_allclose(differentiate(np.sin, x), np.cos(x), atol=1e-9)


def test_derivative_error_estimate_is_small():
    value, error = differentiate_with_error(np.exp, 0.3)
    assert value == pytest.approx(math.exp(0.3), rel=1e-9)
    assert 0.0 <= error < 1e-6


def test_derivative_step_respects_domain():
    assert differentiate(np.sqrt, 0.25, domain=(0.0, 1.0)) == pytest.approx(1.0, rel=1e-9)
    assert differentiate(np.sqrt, 0.01, domain=(0.0, 1.0)) == pytest.approx(5.0, rel=1e-5)


def test_one_sided_stencil_on_boundary():
    assert differentiate(np.square, 0.0, domain=(0.0, 1.0)) == pytest.approx(0.0, abs=1e-9)
    assert differentiate(np.square, 1.0, domain=(0.0, 1.0)) == pytest.approx(2.0, rel=1e-9)


def test_stencil_stays_inside_near_boundary():
    seen = []

    def g(t):
        seen.append(np.max(t))
        return np.asarray(t) ** 2

    value = differentiate(g, 1.0 - 1e-15, domain=(0.0, 1.0), strict=False)
    assert max(seen) < 1.0
    assert value == pytest.approx(2.0, abs=0.05)


def test_derivative_outside_domain():
    with pytest.raises(DomainError):
        differentiate(np.sin, 1.5, domain=(0.0, 1.0))


def test_unsettled_derivative():
    with pytest.raises(DerivativeError):
        differentiate(np.sign, 0.0)
    value = differentiate(np.sign, 0.0, strict=False)
    assert abs(value) > 1.0


def test_extrapolation_of_root_behaviour():
    value, error = extrapolate_to_endpoint(lambda t: 1.0 + np.sqrt(t), 0.0, 0.1)
    assert value == pytest.approx(1.0, abs=1e-10)
    assert error < 1e-8


def test_extrapolation_from_the_right():
    value, _ = extrapolate_to_endpoint(lambda t: 2.0 + (1.0 - t) ** 0.3, 1.0, -0.05)
    assert value == pytest.approx(2.0, abs=1e-8)


def test_extrapolation_needs_levels():
    with pytest.raises(DomainError):
        extrapolate_to_endpoint(np.cos, 0.0, 0.1, levels=2)
