"""Named verification suites: each one checks an operator identity numerically.

Every suite returns a list of CheckResult records, one per identity and
evaluation setting, with the residual measured against the tolerance from
the registry table.
"""
import logging
from typing import Callable, Dict, List, Optional

import numpy as np

from sonine.errors import ConfigError, DomainError
from sonine.kernels import default_conjugacy_tol, make_pair, make_rl_kernel, sonine_check, unit_weight
from sonine.models import CheckResult, KernelFamily, KernelSpec, Side, SingularSpec, SuiteName
from sonine.operators import (
    OperatorContext,
    compose_left,
    compose_right,
    frac_derivative_left,
    frac_derivative_right,
    frac_ibp_residual,
    integration_by_parts_residual,
    inversion_defect_left,
    inversion_defect_right,
    left_derivative,
    left_integral,
    one,
    plain_context,
    right_derivative,
    right_integral,
    type1_ibp_residual,
    type2_ibp_residual,
    volterra_context,
)
from sonine.quadrature import integrate_many
from sonine.registry import TOLERANCES, get_expression
from sonine.utils import interior_grid

logger = logging.getLogger(__name__)

INVERSION_FUNCTIONS = ("one", "ident", "tsq", "cos")
REPRESENTATION_FUNCTIONS = ("ident", "tsq", "sin")


def _result(name: str, residual: float, tolerance: float, **detail) -> CheckResult:
    residual = float(residual)
    passed = bool(np.isfinite(residual) and residual <= tolerance)
    if not passed:
        logger.warning("check %s failed: residual %.3g above %.1g", name, residual, tolerance)
    return CheckResult(name=name, residual=residual, tolerance=tolerance, passed=passed, detail=detail)


def suite_context(spec: KernelSpec) -> OperatorContext:
    """Context (k, k') for the family; the E1 family uses k = Volterra, k' = E1."""
    if spec.family in (KernelFamily.E1, KernelFamily.VOLTERRA) and spec.with_family is None:
        return volterra_context(spec.alpha)
    pair = make_pair(spec)
    if pair.conjugate is None:
        raise ConfigError(f"family {spec.family.value} has no conjugate kernel; pass a partner with --with")
    return OperatorContext.build(pair.kernel, pair.weight, conjugate=pair.conjugate)


def _plain_integral(ctx: OperatorContext, f: Callable, x: np.ndarray, side: Side) -> np.ndarray:
    """integral_a^x f omega (left) or integral_x^b f omega (right)."""
    w = ctx.weight
    lo, hi = (np.full_like(x, ctx.a), x) if side == Side.LEFT else (x, np.full_like(x, ctx.b))
    return integrate_many(lambda t, dl, dr, idx: f(t) * w(t), lo, hi, SingularSpec(), 1e-12).values


def composition_suite(spec: KernelSpec, points: int = 5, **_) -> List[CheckResult]:
    ctx = suite_context(spec)
    k_ctx = plain_context(ctx.kernel, ctx.weight)
    kp_ctx = plain_context(ctx.conjugate, ctx.weight)
    xs = interior_grid(ctx.a, ctx.b, points)
    f = get_expression("ident").value
    tol = TOLERANCES["composition"]
    results = []

    left = compose_left(kp_ctx, k_ctx, f, xs)
    plain = _plain_integral(ctx, f, xs, Side.LEFT)
    results.append(_result("composition conjugate left, nested vs integral",
                           np.max(np.abs(np.asarray(left.nested) - plain)), tol, x=xs.tolist()))
    results.append(_result("composition conjugate left, nested vs direct",
                           np.max(np.abs(np.asarray(left.nested) - np.asarray(left.direct))), tol))

    right = compose_right(kp_ctx, k_ctx, f, xs)
    plain = _plain_integral(ctx, f, xs, Side.RIGHT)
    results.append(_result("composition conjugate right, nested vs integral",
                           np.max(np.abs(np.asarray(right.nested) - plain)), tol))

    if spec.family == KernelFamily.RL:
        w = unit_weight(ctx.a, ctx.b)
        c1 = plain_context(make_rl_kernel(0.3, ctx.a, ctx.b), w)
        c2 = plain_context(make_rl_kernel(0.4, ctx.a, ctx.b), w)
        semigroup = compose_left(c1, c2, one, xs)
        direct = left_integral(plain_context(make_rl_kernel(0.7, ctx.a, ctx.b), w), one, xs)
        results.append(_result("composition rl 0.3 + 0.4 = 0.7",
                               np.max(np.abs(np.asarray(semigroup.nested) - direct)), tol))
        results.append(_result("composition rl semigroup, nested vs delta",
                               np.max(np.abs(np.asarray(semigroup.nested) - np.asarray(semigroup.direct))), tol))
    return results


def inversion_suite(spec: KernelSpec, points: int = 5, **_) -> List[CheckResult]:
    """D^{k'}(I^k f) = f on both sides."""
    ctx = suite_context(spec)
    dual = ctx.dual()
    xs = interior_grid(ctx.a, ctx.b, points)
    tol = TOLERANCES["inversion"]
    results = []
    for name in INVERSION_FUNCTIONS:
        f = get_expression(name).value
        expected = f(xs)
        left = left_derivative(dual, lambda t: left_integral(ctx, f, t), xs)
        right = right_derivative(dual, lambda t: right_integral(ctx, f, t), xs)
        results.append(_result(f"inversion left f={name}", np.max(np.abs(left - expected)), tol))
        results.append(_result(f"inversion right f={name}", np.max(np.abs(right - expected)), tol))
    return results


def range_suite(spec: KernelSpec, points: int = 3, **_) -> List[CheckResult]:
    """I^k(D^{k'} f) = f for f = I^k cos, where the boundary term vanishes."""
    ctx = suite_context(spec)
    xs = interior_grid(ctx.a, ctx.b, points)
    tol = TOLERANCES["range"]
    phi = get_expression("cos").value

    def f_left(t):
        return left_integral(ctx, phi, t)

    def f_right(t):
        return right_integral(ctx, phi, t)

    left = inversion_defect_left(ctx, f_left, xs)
    right = inversion_defect_right(ctx, f_right, xs)
    return [
        _result("range left f=I^k cos", max(r.defect for r in left), tol,
                boundary_value=left[0].boundary_value),
        _result("range right f=I^k cos", max(r.defect for r in right), tol,
                boundary_value=right[0].boundary_value),
    ]


def defect_suite(spec: KernelSpec, points: int = 3, **_) -> List[CheckResult]:
    """I^k(D^{k'} f) = f - (I^{k'} f)(a) D^k 1, for f = 1 and f = k(., a)."""
    ctx = suite_context(spec)
    xs = interior_grid(ctx.a, ctx.b, points)
    tol = TOLERANCES["defect"]
    k = ctx.kernel
    results = []
    for side, run in ((Side.LEFT, inversion_defect_left), (Side.RIGHT, inversion_defect_right)):
        constant = run(ctx, one, xs)
        results.append(_result(f"defect {side.value} f=1", max(r.defect for r in constant), tol,
                               boundary_value=constant[0].boundary_value))
        if side == Side.LEFT:
            def kernel_at_a(t):
                return k.evaluate(ctx.a, np.asarray(t, dtype=float) - ctx.a)
        else:
            def kernel_at_a(t):
                return k.evaluate(np.asarray(t, dtype=float), ctx.b - np.asarray(t, dtype=float))
        shifted = run(ctx, kernel_at_a, xs, f_exponent=k.diag_exponent)
        results.append(_result(f"defect {side.value} f=k at endpoint", max(r.defect for r in shifted), tol,
                               boundary_value=shifted[0].boundary_value))
    return results


def ibp_suite(spec: KernelSpec, **_) -> List[CheckResult]:
    """integral (I_a^k f) g omega = integral (I_b^k g) f omega."""
    pair = make_pair(spec)
    k, w = pair.kernel, pair.weight
    tol = TOLERANCES["ibp_logarithmic" if k.logarithmic else "ibp"]
    results = []
    for f_name, g_name in (("ident", "one"), ("ident", "ident"), ("exp", "cos")):
        residual = integration_by_parts_residual(k, w, get_expression(f_name).value, get_expression(g_name).value)
        results.append(_result(f"ibp {k.name} f={f_name} g={g_name}", residual, tol))
    return results


def comphs_suite(spec: KernelSpec, points: int = 5, **_) -> List[CheckResult]:
    """H_0(S_0 f) = S_0(H_0 f) = integral_0^x f."""
    ctx = volterra_context(spec.alpha)
    h_ctx = plain_context(ctx.kernel, ctx.weight)
    s_ctx = plain_context(ctx.conjugate, ctx.weight)
    xs = interior_grid(0.0, 1.0, points)
    tol = TOLERANCES["comphs"]
    results = []
    for name in ("ident", "cos"):
        f = get_expression(name).value
        plain = _plain_integral(ctx, f, xs, Side.LEFT)
        hs = compose_left(h_ctx, s_ctx, f, xs, direct=False)
        sh = compose_left(s_ctx, h_ctx, f, xs, direct=False)
        results.append(_result(f"comphs H(S f) f={name}", np.max(np.abs(np.asarray(hs.nested) - plain)), tol))
        results.append(_result(f"comphs S(H f) f={name}", np.max(np.abs(np.asarray(sh.nested) - plain)), tol))
    return results


def cht_suite(spec: KernelSpec, **_) -> List[CheckResult]:
    tol = TOLERANCES["cht"]
    return [
        _result(f"cht f={f} g={g}", type1_ibp_residual(spec.alpha, get_expression(f).value, get_expression(g).value),
                tol)
        for f, g in (("ident", "one"), ("sin", "exp"))
    ]


def type2ibp_suite(spec: KernelSpec, **_) -> List[CheckResult]:
    tol = TOLERANCES["type2ibp"]
    return [
        _result(f"type2 ibp f={f} g={g}",
                type2_ibp_residual(spec.alpha, get_expression(f).value, get_expression(g).value), tol)
        for f, g in (("exp", "one"), ("ident", "cos"))
    ]


def ripgd_suite(spec: KernelSpec, theta: float = 1.5, **_) -> List[CheckResult]:
    tol = TOLERANCES["ripgd"]
    results = []
    for pf, pg in (("one", "ident"), ("cos", "exp")):
        ef, eg = get_expression(pf), get_expression(pg)
        residual = frac_ibp_residual(theta, ef.value, eg.value, dphi_f=ef.derivative, dphi_g=eg.derivative)
        results.append(_result(f"ripgd theta={theta:g} phi_f={pf} phi_g={pg}", residual, tol))
    return results


def representation_suite(spec: KernelSpec, theta: float = 1.5, points: int = 5, **_) -> List[CheckResult]:
    """Direct d/dx S^{theta-1} f against the representation formula."""
    xs = interior_grid(0.0, 1.0, points)
    tol = TOLERANCES["representation"]
    results = []
    for name in REPRESENTATION_FUNCTIONS:
        expr = get_expression(name)
        for side, run in ((Side.LEFT, frac_derivative_left), (Side.RIGHT, frac_derivative_right)):
            rows = run(theta, expr.value, xs, df=expr.derivative)
            gap = max(abs(r.direct - r.representation) for r in rows)
            results.append(_result(f"representation {side.value} theta={theta:g} f={name}", gap, tol))
    return results


def sonine_suite(spec: KernelSpec, **_) -> List[CheckResult]:
    pair = make_pair(spec)
    if pair.conjugate is None:
        raise ConfigError(f"family {spec.family.value} has no conjugate kernel for the Sonine check")
    k, kc = pair.kernel, pair.conjugate
    tol = TOLERANCES["sonine"] if (k.logarithmic or kc.logarithmic) else default_conjugacy_tol(k, kc)
    try:
        check = sonine_check(k, kc, np.linspace(0.1, 0.9, 9), tol=tol)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return [check]


SUITES: Dict[SuiteName, Callable[..., List[CheckResult]]] = {
    SuiteName.COMPOSITION: composition_suite,
    SuiteName.INVERSION: inversion_suite,
    SuiteName.RANGE: range_suite,
    SuiteName.DEFECT: defect_suite,
    SuiteName.IBP: ibp_suite,
    SuiteName.COMPHS: comphs_suite,
    SuiteName.CHT: cht_suite,
    SuiteName.TYPE2IBP: type2ibp_suite,
    SuiteName.RIPGD: ripgd_suite,
    SuiteName.REPRESENTATION: representation_suite,
    SuiteName.SONINE: sonine_suite,
}


def run_suite(name: SuiteName, spec: KernelSpec, theta: float = 1.5,
              points: Optional[int] = None) -> List[CheckResult]:
    suite = SUITES[SuiteName(name)]
    kwargs = {"theta": theta}
    if points is not None:
        kwargs["points"] = points
    logger.info("running suite %s for %s(alpha=%g)", SuiteName(name).value, spec.family.value, spec.alpha)
    return suite(spec, **kwargs)
