import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import special

from sonine.errors import DomainError
from sonine.kernels import (
    CallableKernel,
    WeightFunction,
    check_conjugacy,
    composition_delta,
    make_e1_kernel,
    make_erdelyi_kober_kernel,
    make_hadamard_kernel,
    make_pair,
    make_rl_conjugate,
    make_rl_kernel,
    make_unit_kernel,
    make_volterra_kernel,
    membership_report,
    sonine_check,
    triangular_grid,
    unit_weight,
)
from sonine.models import KernelFamily, KernelSpec, WeightKind


def test_rl_kernel_value():
    k = make_rl_kernel(0.5)
    assert k(1.0, 0.75) == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-14)


def test_rl_order_one_is_unit():
    k = make_rl_kernel(1.0)
    np.testing.assert_array_equal(k(np.array([0.5, 0.9]), np.array([0.1, 0.2])), [1.0, 1.0])


def test_kernel_rejects_points_off_the_triangle():
    with pytest.raises(DomainError):
        make_rl_kernel(0.5)(0.3, 0.3)


@pytest.mark.parametrize("factory, args", [
    (make_rl_kernel, (0.0,)),
    (make_rl_kernel, (1.2,)),
    (make_rl_conjugate, (1.0,)),
    (make_hadamard_kernel, (0.5, 0.0, 1.0)),
    (make_erdelyi_kober_kernel, (0.5, -1.0)),
    (make_volterra_kernel, (0.0,)),
    (make_e1_kernel, (-1.0,)),
    (make_unit_kernel, (1.0, 1.0)),
])
def test_factory_domain_errors(factory, args):
    with pytest.raises(DomainError):
        factory(*args)


def test_hadamard_kernel_value():
    k = make_hadamard_kernel(0.4)
    x, y = 2.0, 1.2
    expected = math.log(x / y) ** (0.4 - 1.0) / special.gamma(0.4)
    assert k(x, y) == pytest.approx(expected, rel=1e-13)


def test_erdelyi_kober_kernel_value():
    k = make_erdelyi_kober_kernel(0.3, sigma=2.0)
    x, y = 1.4, 0.6
    expected = (x ** 2 - y ** 2) ** (0.3 - 1.0) / special.gamma(0.3)
    assert k(x, y) == pytest.approx(expected, rel=1e-12)


def test_e1_and_volterra_kernels_scale_with_alpha():
    assert make_e1_kernel(2.0)(0.6, 0.2) == pytest.approx(special.exp1(0.2) / 2.0, rel=1e-14)
    assert make_volterra_kernel(0.5)(0.6, 0.2) > 0.0


def test_weight_functions():
    w = WeightFunction(kind=WeightKind.RECIPROCAL, a=1.0, b=math.e)
    assert w(2.0) == pytest.approx(0.5)
    assert w.sup_norm == pytest.approx(1.0)
    assert w.inv_sup_norm == pytest.approx(math.e)

    p = WeightFunction(kind=WeightKind.POWER, sigma=2.0, a=0.5, b=1.5)
    assert p(1.0) == pytest.approx(2.0)
    assert p.sup_norm == pytest.approx(3.0)
    assert p.inv_sup_norm == pytest.approx(1.0)


@pytest.mark.parametrize("kwargs", [
    {"kind": WeightKind.RECIPROCAL, "a": 0.0, "b": 1.0},
    {"kind": WeightKind.UNIT, "a": 1.0, "b": 0.5},
    {"kind": WeightKind.CALLABLE},
])
def test_weight_validation(kwargs):
    with pytest.raises(ValidationError):
        WeightFunction(**kwargs)


def test_triangular_grid():
    xs, ys = triangular_grid(0.0, 1.0, 4)
    assert xs.size == 6
    assert np.all(xs > ys)
    assert np.all((ys > 0.0) & (xs < 1.0))
    with pytest.raises(DomainError):
        triangular_grid(0.0, 1.0, 1)


def test_unit_composition():
    k = make_unit_kernel()
    assert composition_delta(k, k, unit_weight(), 0.9, 0.4) == pytest.approx(0.5, rel=1e-12)


def test_composition_of_rl_kernels_is_rl():
    # k_a * k_b = k_{a+b} for Riemann-Liouville kernels
    x = np.array([0.5, 0.9, 1.0])
    y = np.array([0.1, 0.2, 0.0])
    delta = composition_delta(make_rl_kernel(0.3), make_rl_kernel(0.4), unit_weight(), x, y)
    np.testing.assert_allclose(delta, (x - y) ** (0.7 - 1.0) / special.gamma(0.7), rtol=1e-9)


def test_composition_domain():
    k = make_unit_kernel()
    with pytest.raises(DomainError):
        composition_delta(k, k, unit_weight(), 0.2, 0.4)


def test_membership_closed_form():
    k = make_rl_kernel(0.5)
    report = membership_report(k, unit_weight())
    assert report.passes
    assert not report.failures
    assert report.sup_fk == pytest.approx(report.closed_form_sup_fk, rel=1e-8)
    assert report.sup_gk == pytest.approx(report.closed_form_sup_gk, rel=1e-8)
    assert report.closed_form_sup_fk == pytest.approx(1.0 / special.gamma(1.5), rel=1e-12)


def test_membership_of_logarithmic_kernel():
    report = membership_report(make_e1_kernel(1.0), unit_weight())
    assert report.passes
    assert report.sup_fk == pytest.approx(1.0 + special.exp1(1.0) - math.exp(-1.0), rel=1e-7)


def test_membership_grid_size():
    with pytest.raises(DomainError):
        membership_report(make_unit_kernel(), unit_weight(), grid_size=8)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.8])
def test_rl_pair_is_conjugate(alpha):
    report = check_conjugacy(make_rl_kernel(alpha), make_rl_conjugate(alpha), unit_weight(), grid_size=6)
    assert report.conjugate
    assert report.max_dev_forward <= 1e-7
    assert len(report.points) == 15


def test_mismatched_rl_pair_is_not_conjugate():
    report = check_conjugacy(make_rl_kernel(0.5), make_rl_conjugate(0.25), unit_weight(), grid_size=5)
    assert not report.conjugate
    assert report.max_dev_forward > 1e-2


def test_non_positive_kernel_is_not_conjugate():
    negative = CallableKernel(name="negative", func=lambda x, y: -np.ones(np.shape(x)))
    report = check_conjugacy(negative, make_unit_kernel(), unit_weight(), grid_size=3)
    assert not report.conjugate
    assert "negative is not positive on the grid" in report.failures


def test_hadamard_pair_is_conjugate():
    k = make_hadamard_kernel(0.4)
    kc = make_hadamard_kernel(0.4, conjugate=True)
    report = check_conjugacy(k, kc, k.native_weight(), grid_size=5)
    assert report.conjugate


def test_erdelyi_kober_pair_is_conjugate():
    k = make_erdelyi_kober_kernel(0.3, sigma=2.0)
    kc = make_erdelyi_kober_kernel(0.3, sigma=2.0, conjugate=True)
    report = check_conjugacy(k, kc, k.native_weight(), grid_size=5)
    assert report.conjugate


def test_explicit_grid_must_lie_above_diagonal():
    with pytest.raises(DomainError):
        check_conjugacy(make_rl_kernel(0.5), make_rl_conjugate(0.5), unit_weight(),
                        grid=(np.array([0.2]), np.array([0.5])))


@pytest.mark.slow
def test_e1_volterra_pair_is_conjugate():
    report = check_conjugacy(make_e1_kernel(1.0), make_volterra_kernel(1.0), unit_weight(), grid_size=4)
    assert report.tolerance == pytest.approx(1e-5)
    assert report.conjugate


@pytest.mark.slow
def test_e1_volterra_pair_on_full_grid():
    report = check_conjugacy(make_e1_kernel(0.5), make_volterra_kernel(0.5), unit_weight(), grid_size=20)
    assert len(report.points) == 190
    assert report.conjugate
    assert max(report.max_dev_forward, report.max_dev_backward) <= 1e-5


def test_sonine_check_for_rl():
    result = sonine_check(make_rl_kernel(0.3), make_rl_conjugate(0.3), [0.25, 0.5, 1.0])
    assert result.passed
    assert result.residual < 1e-8


def test_sonine_check_needs_convolution_kernels():
    with pytest.raises(DomainError):
        sonine_check(make_hadamard_kernel(0.5), make_hadamard_kernel(0.5, conjugate=True), [1.5])


def test_make_pair_defaults():
    pair = make_pair(KernelSpec(family="rl", alpha=0.3))
    assert pair.kernel.order == pytest.approx(0.3)
    assert pair.conjugate.order == pytest.approx(0.7)
    assert pair.weight.kind == WeightKind.UNIT

    hadamard = make_pair(KernelSpec(family="hadamard", alpha=0.5))
    assert (hadamard.weight.a, hadamard.weight.b) == (1.0, pytest.approx(math.e))
    assert hadamard.weight.kind == WeightKind.RECIPROCAL

    assert make_pair(KernelSpec(family="unit")).conjugate is None


def test_make_pair_e1_family():
    pair = make_pair(KernelSpec(family="e1", alpha=1.0))
    assert pair.kernel.name == "e1(1)"
    assert pair.conjugate.name == "volterra(1)"
    with pytest.raises(DomainError):
        make_pair(KernelSpec(family="volterra", alpha=1.0, b=2.0))


def test_make_pair_explicit_partner():
    pair = make_pair(KernelSpec.model_validate({"family": "rl", "alpha": 0.5, "with": "unit"}))
    assert pair.family == KernelFamily.RL
    assert pair.conjugate.name == "unit"


def test_kernel_spec_aliases():
    assert KernelSpec(family="Riemann-Liouville").family == KernelFamily.RL
    assert KernelSpec(family="ek").family == KernelFamily.ERDELYI_KOBER
