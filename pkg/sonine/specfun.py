"""Special functions behind the exponential-integral / Volterra kernel pair.

E1, the lower incomplete gamma function and its regularized form come from
scipy.special. The Volterra-type function

    F(lam) = exp(-lam) * integral_0^inf lam**(t-1) / Gamma(t) dt

has no library implementation; it is evaluated here by Gauss-Legendre
quadrature of the t-integral in the log domain over a window around the
mode of the integrand, with explicit tail bounds.
"""
import logging
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special
from scipy.interpolate import CubicSpline

from sonine.config import settings
from sonine.errors import AccuracyError, DomainError
from sonine.models import SpecFunConfig, VolterraEvaluation

logger = logging.getLogger(__name__)

_GL_ORDER = 16
_WINDOW_WIDTHS = (14.0, 28.0, 56.0, 112.0)


def default_config() -> SpecFunConfig:
    return SpecFunConfig(
        series_tolerance=settings.specfun_series_tolerance,
        max_terms=settings.specfun_max_terms,
        tail_cutoff=settings.specfun_tail_cutoff,
    )


def _positive(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        bad = arr[~(np.isfinite(arr) & (arr > 0.0))].ravel()[0]
        raise DomainError(f"{name} must be a positive finite real, got {bad!r}")
    return arr


def _unwrap(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


def exp_integral_e1(x):
    """E1(x) = integral_x^inf exp(-t)/t dt for x > 0."""
    x = _positive("x", x)
    return _unwrap(special.exp1(x))


def lower_incomplete_gamma(s, x):
    """gamma(s, x) = integral_0^x t**(s-1) exp(-t) dt."""
    s = _positive("s", s)
    x = _positive("x", x)
    # gammainc is regularized; scale back in the log domain to keep large s finite
    return _unwrap(special.gammainc(s, x) * np.exp(special.gammaln(s)))


def regularized_p(s, x):
    """P(s, x) = gamma(s, x) / Gamma(s)."""
    s = _positive("s", s)
    x = _positive("x", x)
    return _unwrap(special.gammainc(s, x))


def e1_mass(x):
    """integral_0^X E1 = X E1(X) - exp(-X) + 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    xp = x[pos]
    out[pos] = xp * special.exp1(xp) - np.expm1(-xp)
    return _unwrap(out)


def _inverse_digamma(y: np.ndarray, iterations: int = 8) -> np.ndarray:
    """Solve digamma(t) = y for t > 0 by Newton's method."""
    t = np.where(y >= -2.22, np.exp(y) + 0.5, -1.0 / (y - special.digamma(1.0)))
    for _ in range(iterations):
        t = t - (special.digamma(t) - y) / special.polygamma(1, t)
        t = np.maximum(t, 1e-300)
    return t


def _volterra_window(log_lam: np.ndarray, lam: np.ndarray, width) -> Tuple[np.ndarray, ...]:
    """Integration window, log-values and relative tail bounds for the given widths."""
    t_star = _inverse_digamma(log_lam)
    sigma = 1.0 / np.sqrt(special.polygamma(1, t_star))
    t_lo = np.maximum(t_star - width * sigma, 0.0)
    t_hi = t_star + width * sigma

    def phi(t):
        return (t - 1.0) * log_lam - special.gammaln(t) - lam

    phi_star = phi(t_star)
    slope_hi = log_lam - special.digamma(t_hi)
    right_tail = np.exp(phi(t_hi) - phi_star) / np.abs(slope_hi)
    left_tail = np.where(t_lo > 0.0, t_lo * np.exp(phi(np.maximum(t_lo, 1e-300)) - phi_star), 0.0)
    return t_lo, t_hi, phi_star, left_tail, right_tail


def _volterra_core(lam: np.ndarray, config: SpecFunConfig):
    lam = np.atleast_1d(lam)
    log_lam = np.log(lam)
    panels = max(config.max_terms // _GL_ORDER, 1)
    nodes, weights = leggauss(_GL_ORDER)

    # smallest window width per element whose tail bounds meet the tolerance
    width = np.full(lam.shape, np.nan)
    for candidate in _WINDOW_WIDTHS:
        t_lo, t_hi, _, left, right = _volterra_window(log_lam, lam, candidate)
        mass_scale = np.sqrt(2.0 * np.pi) * (t_hi - t_lo) / (2.0 * candidate)
        passes = np.isnan(width) & ((left + right) <= config.series_tolerance * mass_scale)
        width[passes] = candidate
    if np.any(np.isnan(width)):
        raise AccuracyError(
            "Volterra function tail bound not met within the widest window at "
            f"lam={float(lam[np.isnan(width)][0])!r}"
        )
    t_lo, t_hi, phi_star, left, right = _volterra_window(log_lam, lam, width)
    if np.any(t_hi > config.tail_cutoff):
        raise AccuracyError(
            f"Volterra function window reaches t={float(np.max(t_hi)):.4g}, "
            f"beyond tail_cutoff={config.tail_cutoff}"
        )

    # composite Gauss-Legendre on `panels` equal panels of [t_lo, t_hi]
    edges = np.linspace(0.0, 1.0, panels + 1)
    centres = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1] - edges[0])
    s = (centres[:, None] + half * nodes[None, :]).ravel()
    w = np.tile(weights * half, panels)
    span = (t_hi - t_lo)[:, None]
    t = t_lo[:, None] + span * s[None, :]
    log_integrand = (t - 1.0) * log_lam[:, None] - special.gammaln(t) - lam[:, None]
    scaled = np.exp(log_integrand - phi_star[:, None])
    log_value = phi_star + np.log(np.sum(scaled * w[None, :], axis=1) * span[:, 0])
    return np.exp(log_value), t_lo, t_hi, left * np.exp(phi_star), right * np.exp(phi_star), s.size


def volterra_f(lam, config: Optional[SpecFunConfig] = None):
    """F(lam) = exp(-lam) * integral_0^inf lam**(t-1)/Gamma(t) dt."""
    config = config or default_config()
    lam_arr = _positive("lam", lam)
    value = _volterra_core(lam_arr.ravel(), config)[0].reshape(lam_arr.shape)
    return _unwrap(value)


def volterra_f_report(lam: float, config: Optional[SpecFunConfig] = None) -> VolterraEvaluation:
    """F(lam) together with the truncation window and tail bounds used."""
    config = config or default_config()
    lam = float(_positive("lam", lam))
    value, t_lo, t_hi, left, right, nodes = _volterra_core(np.array([lam]), config)
    return VolterraEvaluation(
        lam=lam,
        value=float(value[0]),
        t_lo=float(t_lo[0]),
        t_hi=float(t_hi[0]),
        left_tail_bound=float(left[0]),
        right_tail_bound=float(right[0]),
        nodes=nodes,
    )


class VolterraInterpolant:
    """Cubic spline of ln F against ln lam, built once from volterra_f samples.

    Quadrature sweeps evaluate F at hundreds of thousands of nodes; the
    spline replaces the per-node t-quadrature inside the tabulated range.
    """

    LOG_MIN = -36.0
    LOG_MAX = 6.5
    SAMPLES = 4001

    def __init__(self, config: Optional[SpecFunConfig] = None):
        self.config = config or default_config()
        grid = np.linspace(self.LOG_MIN, self.LOG_MAX, self.SAMPLES)
        values = _volterra_core(np.exp(grid), self.config)[0]
        self._spline = CubicSpline(grid, np.log(values))
        logger.debug("Built Volterra interpolant on %d nodes", self.SAMPLES)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.empty_like(lam)
        with np.errstate(divide="ignore"):
            log_lam = np.log(lam)
        inside = (log_lam >= self.LOG_MIN) & (log_lam <= self.LOG_MAX)
        out[inside] = np.exp(self._spline(log_lam[inside]))
        outside = ~inside
        if np.any(outside):
            out[outside] = _volterra_core(lam[outside], self.config)[0]
        return _unwrap(out)


@lru_cache(maxsize=4)
def volterra_interpolant(config: Optional[SpecFunConfig] = None) -> VolterraInterpolant:
    return VolterraInterpolant(config)


def volterra_mass(eps, config: Optional[SpecFunConfig] = None):
    """integral_0^eps F = integral_0^inf P(t, eps) dt.

    P(t, eps) <= eps**t / Gamma(t + 1), so for eps < 1 the t-integrand decays
    at rate L = -ln(eps); the window [0, T] is cut where the decay bound and
    the Poisson-tail bound of P both fall below the tolerance.
    """
    config = config or default_config()
    eps_arr = np.atleast_1d(_positive("eps", eps)).astype(float)
    log_eps = np.log(eps_arr)
    tail = -np.log(config.series_tolerance)
    poisson_end = eps_arr + 12.0 * np.sqrt(eps_arr) + 40.0
    with np.errstate(divide="ignore"):
        decay_end = np.where(log_eps < 0.0, tail / np.maximum(-log_eps, 1e-300), np.inf)
    t_end = np.minimum(poisson_end, decay_end)

    panels = max(2 * config.max_terms // _GL_ORDER, 1)
    nodes, weights = leggauss(_GL_ORDER)
    edges = np.linspace(0.0, 1.0, panels + 1)
    centres = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1] - edges[0])
    s = (centres[:, None] + half * nodes[None, :]).ravel()
    w = np.tile(weights * half, panels)
    t = t_end[:, None] * s[None, :]
    values = special.gammainc(t, eps_arr[:, None])
    mass = np.sum(values * w[None, :], axis=1) * t_end
    return _unwrap(mass.reshape(np.shape(eps)))


def laplace_numeric(f: Callable, lam: float, tol: float = 1e-10, left_mass: Optional[Callable] = None):
    """integral_0^inf exp(-lam t) f(t) dt, for verification only.

    The half-line is cut at T where exp(-lam T) < tol and mapped through the
    singular-quadrature engine with a logarithmic left endpoint (E1 and F are
    both log-type at 0). `left_mass(eps)` = integral_0^eps f replaces the
    innermost panel; F needs it, its mass near 0 decays like 1/|ln eps|.
    """
    from sonine.models import SingularSpec
    from sonine.quadrature import integrate_many

    lam = float(_positive("lam", lam))
    t_end = -np.log(tol * 1e-3) / lam
    spec = SingularSpec(left_log=True)

    def integrand(t, dl, dr, idx):
        return np.exp(-lam * dl) * np.asarray(f(dl), dtype=float)

    left_cap = None
    if left_mass is not None:
        def left_cap(eps, idx):
            return np.asarray(left_mass(eps), dtype=float)

    batch = integrate_many(integrand, np.array([0.0]), np.array([t_end]), spec, tol, left_cap=left_cap)
    if not batch.converged[0]:
        raise AccuracyError(
            f"Laplace transform at lam={lam} did not converge "
            f"(error estimate {batch.errors[0]:.3g})",
            best=float(batch.values[0]),
        )
    return float(batch.values[0])


def convolution_e1_f(z, tol: float = 1e-11):
    """(E1 * F)(z) = integral_0^z E1(z - t) F(t) dt, which equals 1 for z > 0."""
    from sonine.models import SingularSpec
    from sonine.quadrature import integrate_many

    z = np.atleast_1d(_positive("z", z)).astype(float)
    interp = volterra_interpolant()
    spec = SingularSpec(left_log=True, right_log=True)

    def integrand(t, dl, dr, idx):
        return special.exp1(dr) * interp(dl)

    def left_cap(eps, idx):
        return special.exp1(z[idx]) * volterra_mass(eps)

    def right_cap(eps, idx):
        return interp(z[idx]) * e1_mass(eps)

    batch = integrate_many(integrand, np.zeros_like(z), z, spec, tol,
                           left_cap=left_cap, right_cap=right_cap)
    return _unwrap(batch.values.reshape(z.shape)) if z.size > 1 else float(batch.values[0])
