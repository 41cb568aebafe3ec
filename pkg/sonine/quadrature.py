"""Weakly singular quadrature and numerical differentiation.

Every integral in the package goes through `integrate_many`: a vectorized
global-adaptive Gauss-Kronrod 7/15 loop over a batch of independent
integrals. Each interval [a, b] is split at its midpoint and every half is
parametrised by the distance ("gap") to its own endpoint, so integrands see
t - a and b - t exactly even when they are far below b * machine epsilon.
"""
import logging
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from sonine.config import settings
from sonine.errors import DerivativeError, DomainError, QuadratureError
from sonine.models import QuadResult, SingularSpec

logger = logging.getLogger(__name__)

# Kronrod abscissae and weights (15-point rule), Gauss weights (7-point rule)
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_X15 = np.concatenate([-XGK[:7], [0.0], XGK[6::-1]])
_WK15 = np.concatenate([WGK[:7], [WGK[7]], WGK[6::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = WG[:3]
_WG15[7] = WG[3]
_WG15[[13, 11, 9]] = WG[:3]

GRADING_RATIO = 0.15
_EPS = np.finfo(float).eps

Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
EndpointCap = Callable[[np.ndarray, np.ndarray], np.ndarray]


class QuadBatch(NamedTuple):
    values: np.ndarray
    errors: np.ndarray
    evaluations: np.ndarray
    converged: np.ndarray


class _Panels(NamedTuple):
    """Panels in substitution coordinates: gap = scale * s**power, s in [s0, s1]."""
    idx: np.ndarray
    side: np.ndarray  # 0: gap measured from a, 1: gap measured from b
    scale: np.ndarray
    power: np.ndarray
    s0: np.ndarray
    s1: np.ndarray

    def take(self, mask) -> "_Panels":
        return _Panels(*(field[mask] for field in self))

    @staticmethod
    def concat(parts: Sequence["_Panels"]) -> "_Panels":
        return _Panels(*(np.concatenate(fields) for fields in zip(*parts)))

    def bisect(self) -> "_Panels":
        mid = 0.5 * (self.s0 + self.s1)
        left = self._replace(s1=mid)
        right = self._replace(s0=mid)
        return _Panels.concat([left, right])


def grading_depth(tol: float) -> int:
    return max(int(np.ceil(np.log(tol) / np.log(GRADING_RATIO))), 1)


def _initial_panels(a: np.ndarray, b: np.ndarray, length: np.ndarray, spec: SingularSpec, tol: float,
                    left_cap: Optional[EndpointCap], right_cap: Optional[EndpointCap]):
    n = length.size
    # an interval holding no float strictly inside it contributes nothing
    live = np.flatnonzero(np.nextafter(a, np.inf) < b)
    half = 0.5 * length[live]
    depth = grading_depth(tol)
    caps = np.zeros(n)
    parts = []

    sides = (
        (0, spec.left_exponent, spec.left_log, left_cap),
        (1, spec.right_exponent, spec.right_log, right_cap),
    )
    for side, exponent, logarithmic, cap in sides:
        power = 1.0 / (1.0 - exponent)
        side_arr = np.full(live.size, side)
        if not logarithmic:
            parts.append(_Panels(live, side_arr, half, np.full(live.size, power),
                                 np.zeros(live.size), np.ones(live.size)))
            continue
        ratios = GRADING_RATIO ** np.arange(depth + 1)
        for j in range(depth):
            parts.append(_Panels(live, side_arr, half, np.ones(live.size),
                                 np.full(live.size, ratios[j + 1]), np.full(live.size, ratios[j])))
        innermost = half * ratios[depth]
        if cap is not None:
            caps[live] += np.asarray(cap(innermost, live), dtype=float)
        else:
            parts.append(_Panels(live, side_arr, innermost, np.full(live.size, power),
                                 np.zeros(live.size), np.ones(live.size)))
    return _Panels.concat(parts), caps


def _evaluate(f: Integrand, panels: _Panels, a: np.ndarray, b: np.ndarray,
              length: np.ndarray, chunk_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    centre = 0.5 * (panels.s0 + panels.s1)
    half = 0.5 * (panels.s1 - panels.s0)
    s = centre[:, None] + half[:, None] * _X15[None, :]
    p = panels.power[:, None]
    gap = panels.scale[:, None] * s ** p
    jacobian = panels.scale[:, None] * p * s ** (p - 1.0)
    other = length[panels.idx][:, None] - gap
    from_left = (panels.side == 0)[:, None]
    left_gap = np.where(from_left, gap, other)
    right_gap = np.where(from_left, other, gap)
    t = np.where(from_left, a[panels.idx][:, None] + gap, b[panels.idx][:, None] - gap)
    # t may round onto an endpoint where f is singular; the gaps stay exact
    t = np.clip(t, np.nextafter(a, np.inf)[panels.idx][:, None], np.nextafter(b, -np.inf)[panels.idx][:, None])
    owner = np.broadcast_to(panels.idx[:, None], s.shape)

    fv = np.empty(s.shape)
    rows_per_call = max(chunk_nodes // 15, 1)
    for start in range(0, s.shape[0], rows_per_call):
        rows = slice(start, start + rows_per_call)
        out = f(t[rows].ravel(), left_gap[rows].ravel(), right_gap[rows].ravel(), owner[rows].ravel())
        fv[rows] = np.broadcast_to(np.asarray(out, dtype=float), t[rows].size).reshape(t[rows].shape)

    if not np.all(np.isfinite(fv)):
        bad = np.argwhere(~np.isfinite(fv))[0]
        raise QuadratureError(
            f"Integrand is not finite at t={t[tuple(bad)]!r} "
            f"(integral #{int(panels.idx[bad[0]])})"
        )

    fv = fv * jacobian
    resk = fv @ _WK15
    resg = fv @ _WG15
    mean = 0.5 * resk
    resasc = (np.abs(fv - mean[:, None]) @ _WK15) * half
    resabs = (np.abs(fv) @ _WK15) * half
    resk = resk * half
    err = np.abs(resk - resg * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where((resasc > 0.0) & (err > 0.0),
                          resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5), err)
    err = np.maximum(scaled, 50.0 * _EPS * resabs)
    return resk, err


def integrate_many(f: Integrand, a, b, spec: Optional[SingularSpec] = None,
                   tol: Optional[float] = None,
                   left_cap: Optional[EndpointCap] = None,
                   right_cap: Optional[EndpointCap] = None,
                   max_rounds: Optional[int] = None,
                   max_panels: Optional[int] = None) -> QuadBatch:
    """Integrate f over each [a[i], b[i]] in one adaptive loop.

    f(t, left_gap, right_gap, index) receives flat arrays; `index` names the
    owning integral. Nodes t lie strictly inside their interval even when
    a gap is below the float spacing at an endpoint; an interval with no
    float strictly inside it integrates to 0 without calling f. Caps
    replace the innermost graded panel of a logarithmic endpoint with
    cap(eps, index) when given.
    """
    spec = spec or SingularSpec()
    tol = settings.quad_tol if tol is None else tol
    max_rounds = settings.quad_max_rounds if max_rounds is None else max_rounds
    max_panels = settings.quad_max_panels if max_panels is None else max_panels
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    a, b = a.ravel().copy(), b.ravel().copy()
    if np.any(b < a):
        raise DomainError(f"integration limits must satisfy a <= b, got a={a[b < a][0]}, b={b[b < a][0]}")
    if tol <= 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")

    n = a.size
    length = b - a
    panels, fixed_v = _initial_panels(a, b, length, spec, tol, left_cap, right_cap)
    fixed_e = np.zeros(n)
    evaluations = np.bincount(panels.idx, minlength=n) * 15
    vals, errs = _evaluate(f, panels, a, b, length, settings.quad_chunk_nodes)

    for rnd in range(max_rounds):
        total = fixed_v + np.bincount(panels.idx, vals, n)
        total_err = fixed_e + np.bincount(panels.idx, errs, n)
        target = tol * np.maximum(1.0, np.abs(total))
        count = np.bincount(panels.idx, minlength=n)
        open_ = (total_err > target) & (count > 0) & (count < max_panels)
        logger.debug("quadrature round %d: %d panels, %d integrals open", rnd, panels.idx.size, int(open_.sum()))
        if rnd == max_rounds - 1 or not open_.any():
            break

        keep = open_[panels.idx]
        retired = ~keep
        fixed_v += np.bincount(panels.idx[retired], vals[retired], n)
        fixed_e += np.bincount(panels.idx[retired], errs[retired], n)
        panels, vals, errs = panels.take(keep), vals[keep], errs[keep]

        share = target / np.maximum(count, 1)
        worst = np.zeros(n)
        np.maximum.at(worst, panels.idx, errs)
        split = (errs > share[panels.idx]) | (errs >= worst[panels.idx])
        children = panels.take(split).bisect()
        child_vals, child_errs = _evaluate(f, children, a, b, length, settings.quad_chunk_nodes)
        evaluations += np.bincount(children.idx, minlength=n) * 15
        panels = _Panels.concat([panels.take(~split), children])
        vals = np.concatenate([vals[~split], child_vals])
        errs = np.concatenate([errs[~split], child_errs])

    total = fixed_v + np.bincount(panels.idx, vals, n)
    total_err = fixed_e + np.bincount(panels.idx, errs, n)
    converged = total_err <= tol * np.maximum(1.0, np.abs(total))
    if max_rounds > 1 and not converged.all():
        logger.warning("quadrature: %d of %d integrals missed tol=%.2g (worst error %.3g)",
                       int((~converged).sum()), n, tol, float(total_err.max()))
    return QuadBatch(total, total_err, evaluations, converged)


def integrate_singular(f: Callable, a: float, b: float, spec: Optional[SingularSpec] = None,
                       tol: Optional[float] = None, strict: bool = False) -> QuadResult:
    """Scalar front end of `integrate_many` for an integrand f(t)."""
    if not b > a:
        raise DomainError(f"integrate_singular needs a < b, got a={a}, b={b}")
    batch = integrate_many(lambda t, dl, dr, idx: f(t), a, b, spec, tol)
    result = QuadResult(
        value=float(batch.values[0]),
        error_estimate=float(batch.errors[0]),
        evaluations=int(batch.evaluations[0]),
        converged=bool(batch.converged[0]),
    )
    if strict and not result.converged:
        raise QuadratureError(
            f"Quadrature on [{a}, {b}] stopped at error {result.error_estimate:.3g} "
            f"above tol={tol if tol is not None else settings.quad_tol}",
            best=result,
        )
    return result


def differentiate_with_error(g: Callable, x, tol: Optional[float] = None,
                             domain: Optional[Tuple[float, float]] = None,
                             strict: bool = True):
    """Richardson-extrapolated derivative of a vectorized g and its error estimate.

    All stencil points go to g in a single call. Central steps are capped at
    a quarter of the distance to the domain boundary, so functions with an
    endpoint singularity are differentiated inside their Taylor radius.
    Points on the boundary, or too close to it for a central stencil to be
    resolved in floating point, get a one-sided second-order stencil pointing
    inwards, so every stencil point except x itself lies strictly inside.
    """
    tol = settings.deriv_tol if tol is None else tol
    x_arr = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x_arr).ravel()
    h = tol ** (1.0 / 3.0) * np.maximum(1.0, np.abs(xs))
    central = np.ones(xs.size, dtype=bool)
    direction = np.ones(xs.size)
    if domain is not None:
        lo, hi = domain
        if np.any((xs < lo) | (xs > hi)):
            raise DomainError(f"differentiation point outside [{lo}, {hi}]")
        room = np.minimum(xs - lo, hi - xs)
        # below this the central steps would round onto the boundary
        floor = 1e3 * _EPS * np.maximum(1.0, np.abs(xs))
        central = room >= floor
        direction = np.where(hi - xs >= xs - lo, 1.0, -1.0)
        one_sided = np.where(room > 0.0, np.minimum(h, floor), np.minimum(h, 0.125 * (hi - lo)))
        h = np.where(central, np.minimum(h, 0.25 * room), one_sided)

    steps = h[:, None] * np.array([1.0, 0.5, 0.25])[None, :]
    points = np.empty((xs.size, 7))
    points[:, 0] = xs
    near = np.where(central[:, None], steps, direction[:, None] * steps)
    far_pts = np.where(central[:, None], -steps, 2.0 * direction[:, None] * steps)
    points[:, 1::2] = xs[:, None] + near
    points[:, 2::2] = xs[:, None] + far_pts
    v = np.broadcast_to(np.asarray(g(points.ravel()), dtype=float), points.size).reshape(points.shape)

    plus, minus = v[:, 1::2], v[:, 2::2]
    d_central = (plus - minus) / (2.0 * steps)
    d_onesided = (-3.0 * v[:, [0]] + 4.0 * plus - minus) / (2.0 * direction[:, None] * steps)
    d = np.where(central[:, None], d_central, d_onesided)
    r1 = (4.0 * d[:, 1] - d[:, 0]) / 3.0
    r2 = (4.0 * d[:, 2] - d[:, 1]) / 3.0
    value = np.where(central, (16.0 * r2 - r1) / 15.0, (8.0 * r2 - r1) / 7.0)
    error = np.abs(value - r2)

    unsettled = error > 1e-3 * np.maximum(1.0, np.abs(value))
    if np.any(unsettled):
        where = float(xs[unsettled][0])
        if strict:
            raise DerivativeError(
                f"Richardson table did not settle at x={where!r} (error estimate {float(error[unsettled][0]):.3g})",
                best=value,
            )
        logger.warning("derivative table unsettled at %d points (first x=%r)", int(unsettled.sum()), where)

    if x_arr.ndim == 0:
        return float(value[0]), float(error[0])
    return value.reshape(x_arr.shape), error.reshape(x_arr.shape)


def differentiate(g: Callable, x, tol: Optional[float] = None,
                  domain: Optional[Tuple[float, float]] = None, strict: bool = True):
    return differentiate_with_error(g, x, tol, domain, strict)[0]


def extrapolate_to_endpoint(g: Callable, a: float, h: float, levels: int = 8) -> Tuple[float, float]:
    """Limit of g(a + 2**-j * h) as j grows, by repeated Aitken extrapolation.

    The order of the leading error term is estimated from the data, so
    fractional power behaviour at the endpoint is handled. Pass a negative h
    for a right endpoint.
    """
    if levels < 3:
        raise DomainError(f"extrapolation needs at least 3 levels, got {levels}")
    points = a + h * 2.0 ** -np.arange(levels)
    seq = np.broadcast_to(np.asarray(g(points), dtype=float), points.shape).copy()
    previous = seq[-2]
    while seq.size >= 3:
        d1 = seq[1:-1] - seq[:-2]
        d2 = seq[2:] - seq[1:-1]
        denom = d2 - d1
        with np.errstate(divide="ignore", invalid="ignore"):
            accelerated = np.where(np.abs(denom) > 1e-300, seq[2:] - d2 * d2 / denom, seq[2:])
        previous = seq[-1]
        seq = accelerated
    value = float(seq[-1])
    return value, float(abs(value - previous))
