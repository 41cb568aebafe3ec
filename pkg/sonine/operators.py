"""k-integrals, k'-derivatives and the fractional operators of type (I)/(II).

Functions are numpy-vectorized callables (or GridFunctions) and every
operator accepts a scalar or an array of evaluation points. One call is one
batched quadrature, so operators nest: handing the output of one operator to
another evaluates the inner operator at all outer nodes at once.

Integral operators use `ctx.kernel` as k. Derivative operators use
`ctx.kernel` in the role of k'; for a conjugate pair (k, k') the derivative
side is reached through `ctx.dual()`.
"""
import logging
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from sonine.config import settings
from sonine.errors import DomainError, NotConjugate, QuadratureError, RelationViolated
from sonine.kernels import (
    CompositionKernel,
    Kernel,
    WeightFunction,
    check_conjugacy,
    make_e1_kernel,
    make_volterra_kernel,
    triangular_grid,
    unit_weight,
)
from sonine.models import (
    CompositionResult,
    ConjugacyReport,
    DefectResult,
    FracDerivativeResult,
    GridFunction,
    Side,
    SingularSpec,
)
from sonine.quadrature import differentiate_with_error, extrapolate_to_endpoint, integrate_many
from sonine.specfun import convolution_e1_f

logger = logging.getLogger(__name__)

Function = Union[Callable, GridFunction, float]

_MAX_EXPONENT = 0.99
# user-facing derivatives stay this fraction of (b - a) away from the endpoints
_ENDPOINT_MARGIN = 1e-4
_MIN_ORDER_GAP = 1e-3


class OperatorContext(BaseModel):
    """A kernel, its optional conjugate partner and the weight they live with."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kernel: Kernel
    weight: WeightFunction
    conjugate: Optional[Kernel] = None
    tol: float = Field(default_factory=lambda: settings.quad_tol, gt=0.0)
    report: Optional[ConjugacyReport] = None

    @classmethod
    def build(cls, kernel: Kernel, weight: Optional[WeightFunction] = None,
              conjugate: Optional[Kernel] = None, tol: Optional[float] = None,
              report: Optional[ConjugacyReport] = None, check: bool = True) -> "OperatorContext":
        weight = weight or kernel.native_weight()
        if conjugate is not None and report is None and check:
            report = check_conjugacy(kernel, conjugate, weight, grid_size=settings.context_check_grid)
        if report is not None and not report.conjugate:
            raise NotConjugate(
                f"{kernel.name} and {report.conjugate_kernel} are not conjugate on [{weight.a}, {weight.b}]: "
                f"deviations {report.max_dev_forward:.3g} / {report.max_dev_backward:.3g} "
                f"exceed {report.tolerance:.1g}",
                report,
            )
        return cls(kernel=kernel, weight=weight, conjugate=conjugate,
                   tol=settings.quad_tol if tol is None else tol, report=report)

    @property
    def a(self) -> float:
        return self.weight.a

    @property
    def b(self) -> float:
        return self.weight.b

    def dual(self) -> "OperatorContext":
        if self.conjugate is None:
            raise DomainError(f"context for {self.kernel.name} has no conjugate kernel")
        report = None
        if self.report is not None:
            report = self.report.model_copy(update={
                "kernel": self.report.conjugate_kernel,
                "conjugate_kernel": self.report.kernel,
                "max_dev_forward": self.report.max_dev_backward,
                "max_dev_backward": self.report.max_dev_forward,
            })
        return OperatorContext(kernel=self.conjugate, weight=self.weight, conjugate=self.kernel,
                               tol=self.tol, report=report)

    def with_tol(self, tol: float) -> "OperatorContext":
        return self.model_copy(update={"tol": tol})


def plain_context(kernel: Kernel, weight: Optional[WeightFunction] = None,
                  tol: Optional[float] = None) -> OperatorContext:
    return OperatorContext.build(kernel, weight, tol=tol)


@lru_cache(maxsize=32)
def volterra_context(alpha: float, check: bool = True) -> OperatorContext:
    """k = F((x - y)/alpha) on [0, 1] with its conjugate k' = E1((x - y)/alpha)/alpha."""
    return OperatorContext.build(make_volterra_kernel(alpha), unit_weight(),
                                 conjugate=make_e1_kernel(alpha), check=check)


def e1_context(alpha: float, check: bool = True) -> OperatorContext:
    return volterra_context(alpha, check).dual()


def as_function(f: Function) -> Callable:
    if isinstance(f, GridFunction):
        return f
    if callable(f):
        return lambda t: np.broadcast_to(np.asarray(f(t), dtype=float), np.shape(t))
    value = float(f)
    return lambda t: np.full(np.shape(t), value)


def one(t):
    return np.ones(np.shape(t))


def _points(ctx: OperatorContext, x) -> Tuple[np.ndarray, np.ndarray]:
    x_arr = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x_arr).ravel()
    if np.any((xs < ctx.a) | (xs > ctx.b)):
        raise DomainError(f"evaluation point outside [{ctx.a}, {ctx.b}]: {xs[(xs < ctx.a) | (xs > ctx.b)][0]!r}")
    return x_arr, xs


def _shaped(values: np.ndarray, x_arr: np.ndarray):
    return float(values[0]) if x_arr.ndim == 0 else values.reshape(x_arr.shape)


def _left_batch(ctx: OperatorContext, f: Function, xs: np.ndarray,
                f_exponent: float = 0.0, f_log: bool = False, max_rounds: Optional[int] = None):
    k, w, fn = ctx.kernel, ctx.weight, as_function(f)

    def integrand(y, dl, dr, idx):
        return k.evaluate(y, dr) * fn(y) * w(y)

    right_cap = None
    if k.logarithmic and k.has_diag_mass():
        def right_cap(eps, idx):
            return fn(xs[idx]) * w(xs[idx]) * k.diag_mass(eps)

    spec = SingularSpec(
        left_exponent=min(k.left_exponent + f_exponent, _MAX_EXPONENT),
        left_log=f_log,
        right_exponent=k.diag_exponent,
        right_log=k.logarithmic,
    )
    return integrate_many(integrand, np.full_like(xs, ctx.a), xs, spec, ctx.tol,
                          right_cap=right_cap, max_rounds=max_rounds)


def _right_batch(ctx: OperatorContext, f: Function, xs: np.ndarray,
                 f_exponent: float = 0.0, f_log: bool = False):
    k, w, fn = ctx.kernel, ctx.weight, as_function(f)

    def integrand(y, dl, dr, idx):
        return k.evaluate(xs[idx], dl) * fn(y) * w(y)

    left_cap = None
    if k.logarithmic and k.has_diag_mass():
        def left_cap(eps, idx):
            return fn(xs[idx]) * w(xs[idx]) * k.diag_mass(eps)

    spec = SingularSpec(
        left_exponent=k.diag_exponent,
        left_log=k.logarithmic,
        right_exponent=min(f_exponent, _MAX_EXPONENT),
        right_log=f_log,
    )
    return integrate_many(integrand, xs, np.full_like(xs, ctx.b), spec, ctx.tol, left_cap=left_cap)


def left_integral(ctx: OperatorContext, f: Function, x, f_exponent: float = 0.0,
                  f_log: bool = False, with_error: bool = False):
    """(I_a^k f)(x) = integral_a^x k(x, y) f(y) omega(y) dy."""
    x_arr, xs = _points(ctx, x)
    batch = _left_batch(ctx, f, xs, f_exponent, f_log)
    if with_error:
        return _shaped(batch.values, x_arr), _shaped(batch.errors, x_arr)
    return _shaped(batch.values, x_arr)


def right_integral(ctx: OperatorContext, f: Function, x, f_exponent: float = 0.0,
                   f_log: bool = False, with_error: bool = False):
    """(I_b^k f)(x) = integral_x^b k(y, x) f(y) omega(y) dy."""
    x_arr, xs = _points(ctx, x)
    batch = _right_batch(ctx, f, xs, f_exponent, f_log)
    if with_error:
        return _shaped(batch.values, x_arr), _shaped(batch.errors, x_arr)
    return _shaped(batch.values, x_arr)


def _derivative(ctx: OperatorContext, f: Function, x, side: Side, user: bool = True,
                f_exponent: float = 0.0, f_log: bool = False, with_error: bool = False):
    x_arr, xs = _points(ctx, x)
    if user:
        margin = _ENDPOINT_MARGIN * (ctx.b - ctx.a)
        near = (xs < ctx.a + margin) | (xs > ctx.b - margin)
        if np.any(near):
            raise DomainError(
                f"derivative refused at x={xs[near][0]!r}: within {margin:.3g} of an endpoint of [{ctx.a}, {ctx.b}]"
            )

    if side == Side.LEFT:
        def g(t):
            return _left_batch(ctx, f, np.asarray(t, dtype=float), f_exponent, f_log).values
        sign = 1.0
    else:
        def g(t):
            return _right_batch(ctx, f, np.asarray(t, dtype=float), f_exponent, f_log).values
        sign = -1.0

    values, errors = differentiate_with_error(g, xs, settings.deriv_tol, domain=(ctx.a, ctx.b), strict=user)
    scale = sign / ctx.weight(xs)
    values = values * scale
    errors = errors * np.abs(scale)
    if with_error:
        return _shaped(values, x_arr), _shaped(errors, x_arr)
    return _shaped(values, x_arr)


def left_derivative(ctx: OperatorContext, f: Function, x, user: bool = True,
                    f_exponent: float = 0.0, f_log: bool = False, with_error: bool = False):
    """(D_a^{k'} f)(x) = (1/omega(x)) d/dx (I_a^{k'} f)(x), with k' = ctx.kernel."""
    return _derivative(ctx, f, x, Side.LEFT, user, f_exponent, f_log, with_error)


def right_derivative(ctx: OperatorContext, f: Function, x, user: bool = True,
                     f_exponent: float = 0.0, f_log: bool = False, with_error: bool = False):
    """(D_b^{k'} f)(x) = -(1/omega(x)) d/dx (I_b^{k'} f)(x), with k' = ctx.kernel."""
    return _derivative(ctx, f, x, Side.RIGHT, user, f_exponent, f_log, with_error)


def derivative_profile(kernel: Kernel, f_exponent: float = 0.0) -> Dict[str, object]:
    """Endpoint behaviour of D^{k'} f: it carries the term f(a) k'(x, a)."""
    return {
        "f_exponent": min(max(kernel.diag_exponent, f_exponent), _MAX_EXPONENT),
        "f_log": kernel.logarithmic,
    }


def check_relation(k1: Kernel, k2: Kernel, w: WeightFunction, n: int = 4) -> None:
    """Raise RelationViolated unless delta_{k1,k2} is finite and positive on a sample grid."""
    xs, ys = triangular_grid(w.a, w.b, n)
    try:
        values = CompositionKernel(k1=k1, k2=k2, weight=w, tol=1e-8).evaluate(ys, xs - ys)
    except QuadratureError as exc:
        raise RelationViolated(f"delta({k1.name},{k2.name}) could not be evaluated: {exc}") from exc
    if not np.all(np.isfinite(values) & (values > 0.0)):
        raise RelationViolated(f"delta({k1.name},{k2.name}) is not finite and positive on the sample grid")


def compose_left(ctx1: OperatorContext, ctx2: OperatorContext, f: Function, x,
                 direct: bool = True) -> CompositionResult:
    """I_a^{k1}(I_a^{k2} f)(x), and I_a^{delta_{k1,k2}} f(x) for comparison."""
    w = ctx1.weight
    check_relation(ctx1.kernel, ctx2.kernel, w)
    _, xs = _points(ctx1, x)

    def inner(t):
        return _left_batch(ctx2, f, np.asarray(t, dtype=float)).values

    nested = _left_batch(ctx1, inner, xs).values
    direct_values = None
    if direct:
        delta = CompositionKernel(k1=ctx1.kernel, k2=ctx2.kernel, weight=w, tol=ctx1.tol)
        direct_values = _left_batch(OperatorContext(kernel=delta, weight=w, tol=ctx1.tol), f, xs).values.tolist()
    return CompositionResult(nested=nested.tolist(), direct=direct_values)


def compose_right(ctx1: OperatorContext, ctx2: OperatorContext, f: Function, x,
                  direct: bool = True) -> CompositionResult:
    """I_b^{k1}(I_b^{k2} f)(x), and I_b^{delta_{k2,k1}} f(x) for comparison."""
    w = ctx1.weight
    check_relation(ctx2.kernel, ctx1.kernel, w)
    _, xs = _points(ctx1, x)

    def inner(t):
        return _right_batch(ctx2, f, np.asarray(t, dtype=float)).values

    nested = _right_batch(ctx1, inner, xs).values
    direct_values = None
    if direct:
        delta = CompositionKernel(k1=ctx2.kernel, k2=ctx1.kernel, weight=w, tol=ctx1.tol)
        direct_values = _right_batch(OperatorContext(kernel=delta, weight=w, tol=ctx1.tol), f, xs).values.tolist()
    return CompositionResult(nested=nested.tolist(), direct=direct_values)


def _outer_integral(fn: Callable, a: float, b: float, tol: float, graded: bool = False) -> float:
    spec = SingularSpec(left_log=graded, right_log=graded)
    batch = integrate_many(lambda t, dl, dr, idx: fn(t), a, b, spec, tol)
    if not batch.converged[0]:
        logger.warning("outer integral on [%g, %g] stopped at error %.3g", a, b, float(batch.errors[0]))
    return float(batch.values[0])


def integration_by_parts_residual(k: Kernel, w: WeightFunction, f: Function, g: Function,
                                  tol: float = 1e-9) -> float:
    """|integral (I_a^k f) g omega - integral (I_b^k g) f omega| over [a, b]."""
    ctx = plain_context(k, w)
    fn, gn = as_function(f), as_function(g)

    def lhs(x):
        return _left_batch(ctx, fn, x).values * gn(x) * w(x)

    def rhs(x):
        return _right_batch(ctx, gn, x).values * fn(x) * w(x)

    left = _outer_integral(lhs, w.a, w.b, tol)
    right = _outer_integral(rhs, w.a, w.b, tol)
    logger.debug("integration by parts for %s: %.12g vs %.12g", k.name, left, right)
    return abs(left - right)


def _boundary_limit(ctx: OperatorContext, f: Function, side: Side, f_exponent: float = 0.0) -> float:
    """(I_a^{k'} f)(a) or (I_b^{k'} f)(b), extrapolated along a + 2**-j h."""
    h = 0.05 * (ctx.b - ctx.a)
    if side == Side.LEFT:
        value, err = extrapolate_to_endpoint(
            lambda t: _left_batch(ctx, f, np.asarray(t, dtype=float), f_exponent).values, ctx.a, h)
    else:
        value, err = extrapolate_to_endpoint(
            lambda t: _right_batch(ctx, f, np.asarray(t, dtype=float), f_exponent).values, ctx.b, -h)
    logger.debug("boundary limit on the %s: %.10g (+/- %.2g)", side.value, value, err)
    return value


def boundary_value(ctx: OperatorContext, f: Function, side: Side = Side.LEFT, f_exponent: float = 0.0) -> float:
    """Public form of the endpoint limit of I^{k'} f, with k' = ctx.kernel."""
    return _boundary_limit(ctx, f, side, f_exponent)


def _defect(ctx: OperatorContext, f: Function, x, side: Side, f_exponent: float):
    if ctx.conjugate is None:
        raise DomainError("the inversion defect needs a context with a conjugate kernel")
    kp_ctx = ctx.dual()
    x_arr, xs = _points(ctx, x)
    fn = as_function(f)
    profile = derivative_profile(kp_ctx.kernel, f_exponent)

    def inner(t):
        return _derivative(kp_ctx, fn, np.asarray(t, dtype=float), side, user=False, f_exponent=f_exponent)

    if side == Side.LEFT:
        lhs = _left_batch(ctx, inner, xs, profile["f_exponent"], profile["f_log"]).values
    else:
        lhs = _right_batch(ctx, inner, xs, profile["f_exponent"], profile["f_log"]).values

    boundary = _boundary_limit(kp_ctx, fn, side, f_exponent)
    # D_a^k 1 = (1/omega) d/dx delta_{k,1}(x, a); on the right D_b^k 1 already carries the sign
    d_delta = np.asarray(_derivative(ctx, one, xs, side, user=False), dtype=float)
    predicted = fn(xs) - boundary * d_delta

    results = [
        DefectResult(x=float(xv), lhs=float(lv), predicted=float(pv), boundary_value=boundary,
                     defect=float(abs(lv - pv)))
        for xv, lv, pv in zip(xs, lhs, predicted)
    ]
    return results[0] if x_arr.ndim == 0 else results


def inversion_defect_left(ctx: OperatorContext, f: Function, x, f_exponent: float = 0.0):
    """I_a^k(D_a^{k'} f)(x) against f(x) - (I_a^{k'} f)(a) (1/omega) d/dx delta_{k,1}(x, a)."""
    return _defect(ctx, f, x, Side.LEFT, f_exponent)


def inversion_defect_right(ctx: OperatorContext, f: Function, x, f_exponent: float = 0.0):
    """I_b^k(D_b^{k'} f)(x) against f(x) + (I_b^{k'} f)(b) (1/omega) d/dx delta_{1,k}(b, x)."""
    return _defect(ctx, f, x, Side.RIGHT, f_exponent)


# fractional operators of type (I) and (II) on [0, 1]

def _h_context(alpha: float) -> OperatorContext:
    return plain_context(make_volterra_kernel(alpha), unit_weight())


def _s_context(alpha: float) -> OperatorContext:
    return plain_context(make_e1_kernel(alpha), unit_weight())


def frac_integral_type1_left(alpha: float, f: Function, x, with_error: bool = False):
    """H_0^alpha f(x) = integral_0^x F((x - y)/alpha) f(y) dy."""
    return left_integral(_h_context(alpha), f, x, with_error=with_error)


def frac_integral_type1_right(alpha: float, f: Function, x, with_error: bool = False):
    """H_1^alpha f(x) = integral_x^1 F((y - x)/alpha) f(y) dy."""
    return right_integral(_h_context(alpha), f, x, with_error=with_error)


def frac_integral_type2_left(alpha: float, f: Function, x, with_error: bool = False):
    """S_0^alpha f(x) = (1/alpha) integral_0^x E1((x - y)/alpha) f(y) dy."""
    return left_integral(_s_context(alpha), f, x, with_error=with_error)


def frac_integral_type2_right(alpha: float, f: Function, x, with_error: bool = False):
    """S_1^alpha f(x) = (1/alpha) integral_x^1 E1((y - x)/alpha) f(y) dy."""
    return right_integral(_s_context(alpha), f, x, with_error=with_error)


def _check_theta(theta: float) -> float:
    if not theta > 1.0:
        raise DomainError(f"fractional derivative order theta must exceed 1, got {theta}")
    if theta - 1.0 < _MIN_ORDER_GAP:
        raise DomainError(
            f"theta - 1 = {theta - 1.0:.3g} is below {_MIN_ORDER_GAP}; the E1 kernel is too close to a delta to resolve"
        )
    return theta - 1.0


def representation_left(theta: float, f: Function, df: Function, x):
    """f(0) E1(x/(theta-1))/(theta-1) + S_0^{theta-1} f'(x)."""
    alpha = _check_theta(theta)
    ctx = _s_context(alpha)
    x_arr, xs = _points(ctx, x)
    values = as_function(f)(np.zeros(1))[0] * ctx.kernel.evaluate(0.0, xs) + _left_batch(ctx, df, xs).values
    return _shaped(values, x_arr)


def representation_right(theta: float, f: Function, df: Function, x):
    """f(1) E1((1-x)/(theta-1))/(theta-1) - S_1^{theta-1} f'(x)."""
    alpha = _check_theta(theta)
    ctx = _s_context(alpha)
    x_arr, xs = _points(ctx, x)
    values = as_function(f)(np.ones(1))[0] * ctx.kernel.evaluate(xs, 1.0 - xs) - _right_batch(ctx, df, xs).values
    return _shaped(values, x_arr)


def _frac_derivative(theta: float, f: Function, x, side: Side, df: Optional[Function], user: bool):
    alpha = _check_theta(theta)
    ctx = _s_context(alpha)
    direct = _derivative(ctx, f, x, side, user=user)
    representation = None
    if df is not None:
        rep = representation_left if side == Side.LEFT else representation_right
        representation = rep(theta, f, df, x)
    if np.ndim(x) == 0:
        return FracDerivativeResult(x=float(x), direct=float(direct),
                                    representation=None if representation is None else float(representation))
    rep_values = [None] * np.size(x) if representation is None else np.ravel(representation)
    return [FracDerivativeResult(x=float(xv), direct=float(dv), representation=None if rv is None else float(rv))
            for xv, dv, rv in zip(np.ravel(x), np.ravel(direct), rep_values)]


def frac_derivative_left(theta: float, f: Function, x, df: Optional[Function] = None, user: bool = True):
    """D_0^theta f = d/dx S_0^{theta-1} f, with the representation-formula value when f' is given."""
    return _frac_derivative(theta, f, x, Side.LEFT, df, user)


def frac_derivative_right(theta: float, f: Function, x, df: Optional[Function] = None, user: bool = True):
    """D_1^theta f = -d/dx S_1^{theta-1} f, with the representation-formula value when f' is given."""
    return _frac_derivative(theta, f, x, Side.RIGHT, df, user)


def approx_identity_error(f: Function, alpha: float, side: Side = Side.LEFT, tol: float = 1e-8) -> float:
    """||S^alpha f - f|| in L1([0, 1]); the boundary layer has width alpha."""
    side = Side(side)
    ctx = _s_context(alpha)
    fn = as_function(f)
    batch = _left_batch if side == Side.LEFT else _right_batch

    def gap(x):
        return np.abs(batch(ctx, fn, x).values - fn(x))

    return _outer_integral(gap, 0.0, 1.0, tol, graded=True)


def derivative_approx_error(f: Function, df: Function, theta: float, side: Side = Side.LEFT,
                            tol: float = 1e-8) -> float:
    """||D_0^theta f - f'|| (left) or ||D_1^theta f + f'|| (right) in L1([0, 1]).

    D^theta f is evaluated through the representation formula, which needs
    f' and holds for continuously differentiable f.
    """
    side = Side(side)
    dfn = as_function(df)
    if side == Side.LEFT:
        def gap(x):
            return np.abs(representation_left(theta, f, dfn, x) - dfn(x))
    else:
        def gap(x):
            return np.abs(representation_right(theta, f, dfn, x) + dfn(x))
    return _outer_integral(gap, 0.0, 1.0, tol, graded=True)


def type1_ibp_residual(alpha: float, f: Function, g: Function, tol: float = 1e-9) -> float:
    """|integral (H_0^alpha f) g - integral (H_1^alpha g) f| over [0, 1]."""
    return integration_by_parts_residual(make_volterra_kernel(alpha), unit_weight(), f, g, tol)


def type2_ibp_residual(alpha: float, f: Function, g: Function, tol: float = 1e-9) -> float:
    """|integral (S_0^alpha f) g - integral (S_1^alpha g) f| over [0, 1]."""
    return integration_by_parts_residual(make_e1_kernel(alpha), unit_weight(), f, g, tol)


def frac_ibp_residual(theta: float, phi_f: Function, phi_g: Function,
                      dphi_f: Optional[Function] = None, dphi_g: Optional[Function] = None,
                      tol: float = 1e-7, inner_tol: float = 1e-9) -> float:
    """|integral f D_0^theta g - integral (D_1^theta f) g| with f = H_1^{theta-1} phi_f, g = H_0^{theta-1} phi_g.

    D^theta goes through the representation formula. Here g(0) = 0 and
    g' = phi_g(0) F(x/alpha) + H_0 phi_g', so

        D_0^theta g = phi_g(0) (E1 * F)(x/alpha) + S_0 H_0 phi_g'(x)
        D_1^theta f = phi_f(1) (E1 * F)((1-x)/alpha) - S_1 H_1 phi_f'(x)

    and no numerical derivative of an operator sits inside the outer
    integrals. A phi given without its derivative is differentiated
    numerically.
    """
    alpha = _check_theta(theta)
    h_ctx = _h_context(alpha).with_tol(inner_tol)
    s_ctx = _s_context(alpha).with_tol(inner_tol)
    pf, pg = as_function(phi_f), as_function(phi_g)
    dpf = _numeric_derivative(pf) if dphi_f is None else as_function(dphi_f)
    dpg = _numeric_derivative(pg) if dphi_g is None else as_function(dphi_g)
    pf1 = float(pf(np.ones(1))[0])
    pg0 = float(pg(np.zeros(1))[0])

    def f(t):
        return _right_batch(h_ctx, pf, np.asarray(t, dtype=float)).values

    def g(t):
        return _left_batch(h_ctx, pg, np.asarray(t, dtype=float)).values

    def h_dpf(t):
        return _right_batch(h_ctx, dpf, np.asarray(t, dtype=float)).values

    def h_dpg(t):
        return _left_batch(h_ctx, dpg, np.asarray(t, dtype=float)).values

    def d_g(x):
        jump = pg0 * np.broadcast_to(convolution_e1_f(x / alpha, inner_tol), x.shape) if pg0 else 0.0
        return jump + _left_batch(s_ctx, h_dpg, x, f_log=True).values

    def d_f(x):
        jump = pf1 * np.broadcast_to(convolution_e1_f((1.0 - x) / alpha, inner_tol), x.shape) if pf1 else 0.0
        return jump - _right_batch(s_ctx, h_dpf, x, f_log=True).values

    left = _outer_integral(lambda x: f(x) * d_g(x), 0.0, 1.0, tol, graded=True)
    right = _outer_integral(lambda x: d_f(x) * g(x), 0.0, 1.0, tol, graded=True)
    logger.debug("fractional integration by parts at theta=%g: %.10g vs %.10g", theta, left, right)
    return abs(left - right)


def _numeric_derivative(fn: Callable) -> Callable:
    def derivative(t):
        return differentiate_with_error(fn, np.asarray(t, dtype=float), domain=(0.0, 1.0), strict=False)[0]
    return derivative


def power_semigroup_defect(alpha: float, beta: float, f: Function, x) -> Dict[str, float]:
    """|H^a(H^b f) - H^{a+b} f| and the S analogue at x; nonzero, unlike power kernels."""
    h_b = _h_context(beta)
    s_b = _s_context(beta)
    fn = as_function(f)
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    def h_inner(t):
        return _left_batch(h_b, fn, np.asarray(t, dtype=float)).values

    def s_inner(t):
        return _left_batch(s_b, fn, np.asarray(t, dtype=float)).values

    h_nested = _left_batch(_h_context(alpha), h_inner, xs).values
    h_direct = _left_batch(_h_context(alpha + beta), fn, xs).values
    s_nested = _left_batch(_s_context(alpha), s_inner, xs).values
    s_direct = _left_batch(_s_context(alpha + beta), fn, xs).values
    return {
        "h": float(np.max(np.abs(h_nested - h_direct))),
        "s": float(np.max(np.abs(s_nested - s_direct))),
    }


def left_integral_on_mesh(ctx: OperatorContext, g: Function, mesh, adaptive: bool = False) -> np.ndarray:
    """(I_a^k g)(x_i) at every mesh node by cell-wise product integration.

    Cells [x_j, x_{j+1}] below x_i are regular; the diagonal cell
    [x_{i-1}, x_i] carries the kernel singularity. With adaptive=False every
    cell gets one fixed Gauss-Kronrod pass, so the result is a fixed linear
    functional of g.
    """
    mesh = np.asarray(mesh, dtype=float)
    if mesh[0] != ctx.a or np.any(np.diff(mesh) <= 0.0):
        raise DomainError("mesh must start at a and be strictly increasing")
    k, w, gn = ctx.kernel, ctx.weight, as_function(g)
    rounds = None if adaptive else 1
    n = mesh.size
    out = np.zeros(n)
    if n < 2:
        return out

    # regular cells: pairs (i, j) with j + 1 < i
    i_idx, j_idx = np.tril_indices(n, k=-2)
    if i_idx.size:
        x_far = mesh[i_idx]
        cell_hi = mesh[j_idx + 1]

        def regular(y, dl, dr, idx):
            return k.evaluate(y, (x_far[idx] - cell_hi[idx]) + dr) * gn(y) * w(y)

        batch = integrate_many(regular, mesh[j_idx], cell_hi, SingularSpec(), ctx.tol, max_rounds=rounds)
        out += np.bincount(i_idx, batch.values, n)

    diag = _left_batch_cells(ctx, gn, mesh[:-1], mesh[1:], rounds)
    out[1:] += diag
    return out


def _left_batch_cells(ctx: OperatorContext, gn: Callable, lo: np.ndarray, hi: np.ndarray,
                      max_rounds: Optional[int]) -> np.ndarray:
    """integral_{lo}^{hi} k(hi, y) g(y) omega(y) dy per cell."""
    k, w = ctx.kernel, ctx.weight

    def integrand(y, dl, dr, idx):
        return k.evaluate(y, dr) * gn(y) * w(y)

    right_cap = None
    if k.logarithmic and k.has_diag_mass():
        def right_cap(eps, idx):
            return gn(hi[idx]) * w(hi[idx]) * k.diag_mass(eps)

    spec = SingularSpec(right_exponent=k.diag_exponent, right_log=k.logarithmic)
    return integrate_many(integrand, lo, hi, spec, ctx.tol, right_cap=right_cap, max_rounds=max_rounds).values


def sweep(operator: Callable, x_grid) -> List[Tuple[float, float, float]]:
    """Rows (x, value, error_estimate) for an operator returning (values, errors) on an array."""
    xs = np.asarray(x_grid, dtype=float).ravel()
    result = operator(xs)
    if isinstance(result, tuple):
        values, errors = result
    else:
        values, errors = result, np.zeros_like(xs)
    values = np.broadcast_to(np.asarray(values, dtype=float), xs.shape)
    errors = np.broadcast_to(np.asarray(errors, dtype=float), xs.shape)
    return [(float(x), float(v), float(e)) for x, v, e in zip(xs, values, errors)]
