import mpmath
import numpy as np
import pytest

from sonine.kernels import make_rl_conjugate, make_rl_kernel, make_unit_kernel, unit_weight
from sonine.operators import OperatorContext, plain_context, volterra_context

mpmath.mp.dps = 30


def mp_e1(x: float) -> float:
    return float(mpmath.e1(x))


def mp_volterra(lam: float) -> float:
    """F(lam) from the defining t-integral in extended precision."""
    lam = mpmath.mpf(lam)
    integral = mpmath.quad(lambda t: lam ** (t - 1) * mpmath.rgamma(t), [0, 1, 4, 16, 60, 200, 400])
    return float(integral * mpmath.exp(-lam))


def mp_beta(p: float, q: float) -> float:
    return float(mpmath.beta(p, q))


@pytest.fixture
def rl_context():
    """Conjugate RL pair of order 0.5 on [0, 1]."""
    return OperatorContext.build(make_rl_kernel(0.5), unit_weight(), conjugate=make_rl_conjugate(0.5))


@pytest.fixture
def rl_context_quarter():
    return OperatorContext.build(make_rl_kernel(0.25), unit_weight(), conjugate=make_rl_conjugate(0.25))


@pytest.fixture
def unit_context():
    return plain_context(make_unit_kernel(), unit_weight())


@pytest.fixture
def volterra_ctx():
    return volterra_context(1.0)


@pytest.fixture
def interior():
    return np.linspace(0.2, 0.8, 4)
