"""Registered test functions, BVP right-hand sides and default tolerances."""
from typing import Callable, Dict, NamedTuple

import numpy as np

from sonine.config import settings
from sonine.errors import ConfigError


class Expression(NamedTuple):
    value: Callable
    derivative: Callable
    description: str


class RightHandSide(NamedTuple):
    value: Callable  # f(t, u)
    lipschitz: float
    description: str


EXPRESSIONS: Dict[str, Expression] = {
    "zero": Expression(lambda t: np.zeros(np.shape(t)), lambda t: np.zeros(np.shape(t)), "f(t) = 0"),
    "one": Expression(lambda t: np.ones(np.shape(t)), lambda t: np.zeros(np.shape(t)), "f(t) = 1"),
    "ident": Expression(lambda t: np.asarray(t, dtype=float), lambda t: np.ones(np.shape(t)), "f(t) = t"),
    "tsq": Expression(lambda t: np.square(t), lambda t: 2.0 * np.asarray(t, dtype=float), "f(t) = t^2"),
    "cos": Expression(np.cos, lambda t: -np.sin(t), "f(t) = cos t"),
    "sin": Expression(np.sin, np.cos, "f(t) = sin t"),
    "exp": Expression(np.exp, np.exp, "f(t) = e^t"),
    # vanishes at t = 1, for the right-sided approximation ladders
    "rtsq": Expression(lambda t: np.square(1.0 - np.asarray(t, dtype=float)),
                       lambda t: -2.0 * (1.0 - np.asarray(t, dtype=float)), "f(t) = (1 - t)^2"),
}


RHS_EXPRESSIONS: Dict[str, RightHandSide] = {
    "one": RightHandSide(lambda t, u: np.ones(np.broadcast(t, u).shape), 0.0, "f(t, u) = 1"),
    "u": RightHandSide(lambda t, u: np.asarray(u, dtype=float) + 0.0 * np.asarray(t), 1.0, "f(t, u) = u"),
    "half_u": RightHandSide(lambda t, u: 0.5 * np.asarray(u, dtype=float) + 0.0 * np.asarray(t), 0.5,
                            "f(t, u) = u / 2"),
    "sin_u": RightHandSide(lambda t, u: np.sin(u) + 0.0 * np.asarray(t), 1.0, "f(t, u) = sin u"),
    "linear": RightHandSide(lambda t, u: np.asarray(t, dtype=float) - 0.5 * np.asarray(u, dtype=float), 0.5,
                            "f(t, u) = t - u / 2"),
}


TOLERANCE_TABLE_VERSION = "2"

TOLERANCES: Dict[str, float] = {
    # verification suites
    "composition": 1e-6,
    "inversion": 5e-5,
    "range": 5e-5,
    "defect": 1e-5,
    "ibp": 1e-6,
    "ibp_logarithmic": 1e-5,
    "comphs": 1e-4,
    "cht": 1e-4,
    "type2ibp": 1e-4,
    "ripgd": 1e-4,
    "representation": 1e-4,
    "sonine": 1e-5,
    # solver
    "bvp_manufactured": 5e-4,
    "bvp_verification": 1e-3,
}


def get_expression(name: str) -> Expression:
    try:
        return EXPRESSIONS[name.lower()]
    except KeyError:
        raise ConfigError(f"Unknown expression '{name}'; registered: {', '.join(sorted(EXPRESSIONS))}") from None


def get_rhs(name: str) -> RightHandSide:
    try:
        return RHS_EXPRESSIONS[name.lower()]
    except KeyError:
        raise ConfigError(
            f"Unknown right-hand side '{name}'; registered: {', '.join(sorted(RHS_EXPRESSIONS))}"
        ) from None


def tolerance_table() -> Dict[str, object]:
    """The suite tolerances plus the conjugacy tolerances currently in effect."""
    return {
        "version": TOLERANCE_TABLE_VERSION,
        "conjugacy_algebraic": settings.conjugacy_tol_algebraic,
        "conjugacy_logarithmic": settings.conjugacy_tol_logarithmic,
        **TOLERANCES,
    }
