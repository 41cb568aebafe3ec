"""Weight functions, kernel-functions and the checks built on them.

A kernel k lives on the triangle {a <= y < x <= b}. Every kernel is
evaluated through `evaluate(y, gap)` = k(y + gap, y) so that quadrature can
hand over the distance to the diagonal exactly.
"""
import logging
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from sonine.config import settings
from sonine.errors import DomainError, QuadratureError
from sonine.models import (
    CheckResult,
    ConjugacyPoint,
    ConjugacyReport,
    KernelFamily,
    KernelSpec,
    MembershipReport,
    SingularSpec,
    WeightKind,
)
from sonine.quadrature import QuadBatch, integrate_many
from sonine.specfun import e1_mass, volterra_interpolant, volterra_mass

logger = logging.getLogger(__name__)


class WeightFunction(BaseModel):
    """Positive weight omega on [a, b] with bounded omega and 1/omega."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: WeightKind = WeightKind.UNIT
    a: float = 0.0
    b: float = 1.0
    sigma: float = 1.0
    func: Optional[Callable] = None

    @model_validator(mode="after")
    def _check(self):
        if not self.b > self.a:
            raise ValueError(f"weight interval needs b > a, got [{self.a}, {self.b}]")
        if self.kind in (WeightKind.RECIPROCAL, WeightKind.POWER) and self.a <= 0.0:
            raise ValueError(f"{self.kind.value} weight needs a > 0, got a={self.a}")
        if self.kind == WeightKind.POWER and self.sigma <= 0.0:
            raise ValueError(f"power weight needs sigma > 0, got {self.sigma}")
        if self.kind == WeightKind.CALLABLE and self.func is None:
            raise ValueError("callable weight needs func")
        return self

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == WeightKind.UNIT:
            return np.ones_like(x)
        if self.kind == WeightKind.RECIPROCAL:
            return 1.0 / x
        if self.kind == WeightKind.POWER:
            return self.sigma * x ** (self.sigma - 1.0)
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape)

    def _sample(self) -> np.ndarray:
        return self(np.linspace(self.a, self.b, 1001))

    @property
    def sup_norm(self) -> float:
        if self.kind == WeightKind.UNIT:
            return 1.0
        if self.kind == WeightKind.RECIPROCAL:
            return 1.0 / self.a
        if self.kind == WeightKind.POWER:
            return float(max(self(self.a), self(self.b)))
        return float(np.max(self._sample()))

    @property
    def inv_sup_norm(self) -> float:
        if self.kind == WeightKind.UNIT:
            return 1.0
        if self.kind == WeightKind.RECIPROCAL:
            return self.b
        if self.kind == WeightKind.POWER:
            return float(1.0 / min(self(self.a), self(self.b)))
        return float(1.0 / np.min(self._sample()))

    def same_measure(self, other: "WeightFunction") -> bool:
        return (self.kind == other.kind and self.kind != WeightKind.CALLABLE
                and (self.kind != WeightKind.POWER or self.sigma == other.sigma))


def unit_weight(a: float = 0.0, b: float = 1.0) -> WeightFunction:
    return WeightFunction(kind=WeightKind.UNIT, a=a, b=b)


class Kernel(BaseModel):
    """Base kernel-function; subclasses implement `evaluate(y, gap)`."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    a: float = 0.0
    b: float = 1.0
    diag_exponent: float = Field(default=0.0, ge=0.0, lt=1.0)
    left_exponent: float = Field(default=0.0, ge=0.0, lt=1.0)
    logarithmic: bool = False
    convolution: bool = False

    def evaluate(self, y, gap):
        raise NotImplementedError

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(x <= y):
            raise DomainError(f"kernel {self.name} is defined for x > y only")
        return self.evaluate(y, x - y)

    def diag_mass(self, eps):
        """integral_0^eps of k(y + g, y) dg for convolution kernels with a log singularity."""
        return None

    def has_diag_mass(self) -> bool:
        return False

    def native_weight(self, a: Optional[float] = None, b: Optional[float] = None) -> WeightFunction:
        return unit_weight(self.a if a is None else a, self.b if b is None else b)

    def closed_form_fk(self, y, w: WeightFunction):
        return None

    def closed_form_gk(self, y, w: WeightFunction):
        return None


class UnitKernel(Kernel):
    name: str = "unit"
    convolution: bool = True

    def evaluate(self, y, gap):
        return np.ones(np.broadcast(np.asarray(y), np.asarray(gap)).shape)

    def closed_form_fk(self, y, w):
        if w.kind != WeightKind.UNIT:
            return None
        return w.b - np.asarray(y, dtype=float)

    def closed_form_gk(self, y, w):
        if w.kind != WeightKind.UNIT:
            return None
        return np.asarray(y, dtype=float) - w.a


class PowerKernel(Kernel):
    """k = rho(x, y)**(order - 1) / Gamma(order), with d rho / dx the native weight."""
    order: float = Field(gt=0.0, le=1.0)

    def distance(self, y, gap):
        raise NotImplementedError

    def evaluate(self, y, gap):
        y = np.asarray(y, dtype=float)
        gap = np.asarray(gap, dtype=float)
        if self.order == 1.0:
            return np.ones(np.broadcast(y, gap).shape)
        rho = self.distance(y, gap)
        return np.exp((self.order - 1.0) * np.log(rho) - special.gammaln(self.order))

    def _native(self, w: WeightFunction) -> bool:
        return w.same_measure(self.native_weight(w.a, w.b))

    def closed_form_fk(self, y, w):
        if not self._native(w):
            return None
        y = np.asarray(y, dtype=float)
        return self.distance(y, w.b - y) ** self.order / special.gamma(self.order + 1.0)

    def closed_form_gk(self, y, w):
        if not self._native(w):
            return None
        y = np.asarray(y, dtype=float)
        return self.distance(w.a, y - w.a) ** self.order / special.gamma(self.order + 1.0)


class RiemannLiouvilleKernel(PowerKernel):
    convolution: bool = True

    def distance(self, y, gap):
        return np.asarray(gap, dtype=float) + 0.0 * np.asarray(y, dtype=float)


class HadamardKernel(PowerKernel):
    def distance(self, y, gap):
        return np.log1p(np.asarray(gap, dtype=float) / np.asarray(y, dtype=float))

    def native_weight(self, a=None, b=None):
        return WeightFunction(kind=WeightKind.RECIPROCAL, a=self.a if a is None else a,
                              b=self.b if b is None else b)


class ErdelyiKoberKernel(PowerKernel):
    sigma: float = Field(default=1.0, gt=0.0)

    def distance(self, y, gap):
        y = np.asarray(y, dtype=float)
        gap = np.asarray(gap, dtype=float)
        return y ** self.sigma * np.expm1(self.sigma * np.log1p(gap / y))

    def native_weight(self, a=None, b=None):
        return WeightFunction(kind=WeightKind.POWER, sigma=self.sigma,
                              a=self.a if a is None else a, b=self.b if b is None else b)


class ExpIntegralKernel(Kernel):
    """k'(x, y) = E1((x - y) / alpha) / alpha."""
    alpha: float = Field(gt=0.0)
    logarithmic: bool = True
    convolution: bool = True

    def evaluate(self, y, gap):
        gap = np.asarray(gap, dtype=float) + 0.0 * np.asarray(y, dtype=float)
        return special.exp1(gap / self.alpha) / self.alpha

    def diag_mass(self, eps):
        return e1_mass(np.asarray(eps, dtype=float) / self.alpha)

    def has_diag_mass(self) -> bool:
        return True

    def closed_form_fk(self, y, w):
        if w.kind != WeightKind.UNIT:
            return None
        return e1_mass((w.b - np.asarray(y, dtype=float)) / self.alpha)

    def closed_form_gk(self, y, w):
        if w.kind != WeightKind.UNIT:
            return None
        return e1_mass((np.asarray(y, dtype=float) - w.a) / self.alpha)


class VolterraKernel(Kernel):
    """k(x, y) = F((x - y) / alpha), F the Volterra-type function."""
    alpha: float = Field(gt=0.0)
    logarithmic: bool = True
    convolution: bool = True

    def evaluate(self, y, gap):
        gap = np.asarray(gap, dtype=float) + 0.0 * np.asarray(y, dtype=float)
        return volterra_interpolant()(gap / self.alpha)

    def _mass(self, length):
        length = np.asarray(length, dtype=float)
        out = np.zeros_like(length)
        pos = length > 0.0
        out[pos] = self.alpha * volterra_mass(length[pos] / self.alpha)
        return out if out.ndim else float(out)

    def diag_mass(self, eps):
        return self._mass(eps)

    def has_diag_mass(self) -> bool:
        return True

    def closed_form_fk(self, y, w):
        if w.kind != WeightKind.UNIT:
            return None
        return self._mass(w.b - np.asarray(y, dtype=float))

    def closed_form_gk(self, y, w):
        if w.kind != WeightKind.UNIT:
            return None
        return self._mass(np.asarray(y, dtype=float) - w.a)


class CallableKernel(Kernel):
    """User kernel k(x, y) with user-declared singularity metadata."""
    func: Callable
    mass: Optional[Callable] = None

    def evaluate(self, y, gap):
        y = np.asarray(y, dtype=float)
        gap = np.asarray(gap, dtype=float)
        return np.asarray(self.func(y + gap, y), dtype=float)

    def diag_mass(self, eps):
        return None if self.mass is None else self.mass(eps)

    def has_diag_mass(self) -> bool:
        return self.mass is not None


def _spec_between(k_right: Kernel, k_left: Kernel) -> SingularSpec:
    """Integrand k_right(x, z) * k_left(z, y) over z in [y, x]."""
    return SingularSpec(
        left_exponent=k_left.diag_exponent,
        right_exponent=k_right.diag_exponent,
        left_log=k_left.logarithmic,
        right_log=k_right.logarithmic,
    )


class CompositionKernel(Kernel):
    """delta_{k1,k2}(x, y) = integral_y^x k1(x, z) k2(z, y) omega(z) dz."""
    k1: Kernel
    k2: Kernel
    weight: WeightFunction
    tol: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _derive_metadata(cls, data):
        if isinstance(data, dict):
            k1, k2 = data["k1"], data["k2"]
            data.setdefault("name", f"delta({k1.name},{k2.name})")
            data.setdefault("diag_exponent", max(0.0, k1.diag_exponent + k2.diag_exponent - 1.0))
            data.setdefault("logarithmic", k1.logarithmic or k2.logarithmic)
            data.setdefault("convolution", k1.convolution and k2.convolution
                            and data["weight"].kind == WeightKind.UNIT)
            data.setdefault("a", data["weight"].a)
            data.setdefault("b", data["weight"].b)
        return data

    def evaluate_batch(self, y, gap) -> QuadBatch:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        gap = np.atleast_1d(np.asarray(gap, dtype=float))
        y, gap = np.broadcast_arrays(y, gap)
        y, gap = y.ravel(), gap.ravel()
        k1, k2, w = self.k1, self.k2, self.weight

        def integrand(z, dl, dr, idx):
            return k1.evaluate(z, dr) * k2.evaluate(y[idx], dl) * w(z)

        right_cap = left_cap = None
        if k1.logarithmic and k1.has_diag_mass():
            def right_cap(eps, idx):
                return k2.evaluate(y[idx], gap[idx]) * w(y[idx] + gap[idx]) * k1.diag_mass(eps)
        if k2.logarithmic and k2.has_diag_mass():
            def left_cap(eps, idx):
                return k1.evaluate(y[idx], gap[idx]) * w(y[idx]) * k2.diag_mass(eps)

        return integrate_many(integrand, y, y + gap, _spec_between(k1, k2), self.tol,
                              left_cap=left_cap, right_cap=right_cap)

    def evaluate(self, y, gap):
        shape = np.broadcast(np.asarray(y), np.asarray(gap)).shape
        return self.evaluate_batch(y, gap).values.reshape(shape)


def _check_alpha(alpha: float, upper_closed: bool = False):
    ok = 0.0 < alpha <= 1.0 if upper_closed else 0.0 < alpha < 1.0
    if not ok:
        bound = "(0, 1]" if upper_closed else "(0, 1)"
        raise DomainError(f"alpha must lie in {bound}, got {alpha}")


def _check_interval(a: float, b: float, positive: bool = False):
    if not b > a:
        raise DomainError(f"interval needs b > a, got [{a}, {b}]")
    if positive and a <= 0.0:
        raise DomainError(f"this kernel family needs a > 0, got a={a}")


def make_unit_kernel(a: float = 0.0, b: float = 1.0) -> UnitKernel:
    _check_interval(a, b)
    return UnitKernel(a=a, b=b)


def make_rl_kernel(alpha: float, a: float = 0.0, b: float = 1.0) -> RiemannLiouvilleKernel:
    _check_alpha(alpha, upper_closed=True)
    _check_interval(a, b)
    return RiemannLiouvilleKernel(name=f"rl({alpha:g})", order=alpha, diag_exponent=1.0 - alpha, a=a, b=b)


def make_rl_conjugate(alpha: float, a: float = 0.0, b: float = 1.0) -> RiemannLiouvilleKernel:
    _check_alpha(alpha)
    _check_interval(a, b)
    return RiemannLiouvilleKernel(name=f"rl'({alpha:g})", order=1.0 - alpha, diag_exponent=alpha, a=a, b=b)


def make_hadamard_kernel(alpha: float, a: float = 1.0, b: float = float(np.e),
                         conjugate: bool = False) -> HadamardKernel:
    _check_alpha(alpha)
    _check_interval(a, b, positive=True)
    order = 1.0 - alpha if conjugate else alpha
    name = f"hadamard'({alpha:g})" if conjugate else f"hadamard({alpha:g})"
    return HadamardKernel(name=name, order=order, diag_exponent=1.0 - order, a=a, b=b)


def make_erdelyi_kober_kernel(alpha: float, sigma: float = 1.0, a: float = 0.5, b: float = 1.5,
                              conjugate: bool = False) -> ErdelyiKoberKernel:
    _check_alpha(alpha)
    _check_interval(a, b, positive=True)
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    order = 1.0 - alpha if conjugate else alpha
    name = f"ek'({alpha:g},{sigma:g})" if conjugate else f"ek({alpha:g},{sigma:g})"
    return ErdelyiKoberKernel(name=name, order=order, sigma=sigma, diag_exponent=1.0 - order, a=a, b=b)


def make_volterra_kernel(alpha: float) -> VolterraKernel:
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return VolterraKernel(name=f"volterra({alpha:g})", alpha=alpha)


def make_e1_kernel(alpha: float) -> ExpIntegralKernel:
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return ExpIntegralKernel(name=f"e1({alpha:g})", alpha=alpha)


class KernelPair(NamedTuple):
    kernel: Kernel
    conjugate: Optional[Kernel]
    weight: WeightFunction
    family: KernelFamily


_DEFAULT_INTERVALS = {
    KernelFamily.HADAMARD: (1.0, float(np.e)),
    KernelFamily.ERDELYI_KOBER: (0.5, 1.5),
}


def _single(family: KernelFamily, spec: KernelSpec, a: float, b: float, conjugate: bool = False) -> Optional[Kernel]:
    if family == KernelFamily.UNIT:
        return None if conjugate else make_unit_kernel(a, b)
    if family == KernelFamily.RL:
        return make_rl_conjugate(spec.alpha, a, b) if conjugate else make_rl_kernel(spec.alpha, a, b)
    if family == KernelFamily.HADAMARD:
        return make_hadamard_kernel(spec.alpha, a, b, conjugate=conjugate)
    if family == KernelFamily.ERDELYI_KOBER:
        return make_erdelyi_kober_kernel(spec.alpha, spec.sigma, a, b, conjugate=conjugate)
    if family == KernelFamily.E1:
        return make_volterra_kernel(spec.alpha) if conjugate else make_e1_kernel(spec.alpha)
    return make_e1_kernel(spec.alpha) if conjugate else make_volterra_kernel(spec.alpha)


def make_pair(spec: KernelSpec) -> KernelPair:
    """Kernel, its partner and the native weight described by a config record."""
    default_a, default_b = _DEFAULT_INTERVALS.get(spec.family, (0.0, 1.0))
    a = default_a if spec.a is None else spec.a
    b = default_b if spec.b is None else spec.b
    if spec.family in (KernelFamily.E1, KernelFamily.VOLTERRA) and (a, b) != (0.0, 1.0):
        raise DomainError(f"the {spec.family.value} family is fixed to [0, 1], got [{a}, {b}]")

    kernel = _single(spec.family, spec, a, b)
    if spec.with_family is not None:
        partner = _single(spec.with_family, spec, a, b)
    else:
        partner = _single(spec.family, spec, a, b, conjugate=True)
    return KernelPair(kernel, partner, kernel.native_weight(a, b), spec.family)


def triangular_grid(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Pairs (x_i, y_j), i > j, of n interior nodes of [a, b]."""
    if n < 2:
        raise DomainError(f"a triangular grid needs n >= 2, got {n}")
    nodes = a + (b - a) * np.arange(1, n + 1) / (n + 1)
    i, j = np.tril_indices(n, k=-1)
    return nodes[i], nodes[j]


def _boundary_graded(a: float, b: float, n: int, toward_b: bool) -> np.ndarray:
    """n uniform points of [a, b) plus points clustering at the open end."""
    uniform = a + (b - a) * np.arange(n) / n
    graded = (b - a) * 10.0 ** -np.arange(2.0, 7.0)
    if toward_b:
        return np.unique(np.concatenate([uniform, b - graded]))
    return np.unique(np.concatenate([uniform + (b - a) / n, a + graded]))


def membership_report(k: Kernel, w: WeightFunction, grid_size: int = 64,
                      tol: Optional[float] = None) -> MembershipReport:
    """Grid estimates of sup F_k and sup G_k, the two marginals of k."""
    if grid_size < 16:
        raise DomainError(f"grid_size must be at least 16, got {grid_size}")
    a, b = w.a, w.b
    y_f = _boundary_graded(a, b, grid_size, toward_b=True)
    y_g = _boundary_graded(a, b, grid_size, toward_b=False)
    failures: List[str] = []

    def fk_integrand(x, dl, dr, idx):
        return k.evaluate(y_f[idx], dl) * w(x)

    def gk_integrand(x, dl, dr, idx):
        return k.evaluate(x, dr) * w(x)

    fk_cap = gk_cap = None
    if k.logarithmic and k.has_diag_mass():
        def fk_cap(eps, idx):
            return w(y_f[idx]) * k.diag_mass(eps)

        def gk_cap(eps, idx):
            return w(y_g[idx]) * k.diag_mass(eps)

    sups = []
    for label, integrand, lo, hi, spec, cap_kw, ys in (
        ("F_k", fk_integrand, y_f, np.full_like(y_f, b),
         SingularSpec(left_exponent=k.diag_exponent, left_log=k.logarithmic),
         {"left_cap": fk_cap}, y_f),
        ("G_k", gk_integrand, np.full_like(y_g, a), y_g,
         SingularSpec(left_exponent=k.left_exponent, right_exponent=k.diag_exponent, right_log=k.logarithmic),
         {"right_cap": gk_cap}, y_g),
    ):
        try:
            batch = integrate_many(integrand, lo, hi, spec, tol, **cap_kw)
        except QuadratureError as exc:
            failures.append(f"{label}: {exc}")
            sups.append((np.full(ys.shape, np.inf), float("inf")))
            continue
        for y, ok in zip(ys, batch.converged):
            if not ok:
                failures.append(f"{label}: quadrature did not converge at y={y!r}")
        sups.append((batch.values, float(np.max(batch.values))))

    (fk, sup_fk), (gk, sup_gk) = sups
    closed_fk = k.closed_form_fk(y_f, w)
    closed_gk = k.closed_form_gk(y_g, w)
    report = MembershipReport(
        kernel=k.name,
        sup_fk=sup_fk,
        sup_gk=sup_gk,
        grid_size=int(y_f.size),
        passes=bool(np.isfinite(sup_fk) and np.isfinite(sup_gk)),
        y_fk=y_f.tolist(),
        fk=np.asarray(fk).tolist(),
        y_gk=y_g.tolist(),
        gk=np.asarray(gk).tolist(),
        closed_form_sup_fk=None if closed_fk is None else float(np.max(closed_fk)),
        closed_form_sup_gk=None if closed_gk is None else float(np.max(closed_gk)),
        failures=failures,
    )
    logger.info("membership %s: sup F_k=%.6g sup G_k=%.6g passes=%s", k.name, sup_fk, sup_gk, report.passes)
    return report


def composition_delta(k1: Kernel, k2: Kernel, w: WeightFunction, x, y, tol: Optional[float] = None):
    """delta_{k1,k2}(x, y), vectorized over x and y."""
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if np.any(x_arr <= y_arr) or np.any(y_arr < w.a) or np.any(x_arr > w.b):
        raise DomainError(f"composition kernel needs {w.a} <= y < x <= {w.b}")
    values = CompositionKernel(k1=k1, k2=k2, weight=w, tol=tol).evaluate(y_arr, x_arr - y_arr)
    return float(values) if values.ndim == 0 else values


def default_conjugacy_tol(k1: Kernel, k2: Kernel) -> float:
    if k1.logarithmic or k2.logarithmic:
        return settings.conjugacy_tol_logarithmic
    return settings.conjugacy_tol_algebraic


def check_conjugacy(k1: Kernel, k2: Kernel, w: WeightFunction,
                    grid: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                    tol: Optional[float] = None, grid_size: Optional[int] = None) -> ConjugacyReport:
    """Grid evidence that delta_{k1,k2} = delta_{k2,k1} = 1."""
    tol = default_conjugacy_tol(k1, k2) if tol is None else tol
    if grid is None:
        grid = triangular_grid(w.a, w.b, grid_size or settings.conjugacy_grid)
    xs, ys = (np.asarray(v, dtype=float).ravel() for v in grid)
    if np.any(xs <= ys):
        raise DomainError("conjugacy grid points must satisfy x > y")
    quad_tol = min(settings.quad_tol, 1e-3 * tol)

    failures: List[str] = []
    positive = True
    for kernel in (k1, k2):
        # positivity can only be sampled, not proven
        if not np.all(np.asarray(kernel.evaluate(ys, xs - ys), dtype=float) > 0.0):
            positive = False
            failures.append(f"{kernel.name} is not positive on the grid")
    deviations = []
    for first, second in ((k1, k2), (k2, k1)):
        delta = CompositionKernel(k1=first, k2=second, weight=w, tol=quad_tol)
        batch = delta.evaluate_batch(ys, xs - ys)
        for x, y, ok in zip(xs, ys, batch.converged):
            if not ok:
                failures.append(f"delta({first.name},{second.name}) not converged at (x, y)=({x!r}, {y!r})")
        deviations.append(batch.values)

    forward, backward = deviations
    dev_f = float(np.max(np.abs(forward - 1.0)))
    dev_b = float(np.max(np.abs(backward - 1.0)))
    report = ConjugacyReport(
        kernel=k1.name,
        conjugate_kernel=k2.name,
        max_dev_forward=dev_f,
        max_dev_backward=dev_b,
        tolerance=tol,
        conjugate=bool(positive and dev_f <= tol and dev_b <= tol),
        points=[ConjugacyPoint(x=float(x), y=float(y), forward=float(f), backward=float(g))
                for x, y, f, g in zip(xs, ys, forward, backward)],
        failures=failures,
    )
    logger.info("conjugacy %s / %s: deviations %.3g, %.3g at tol %.1g -> %s",
                k1.name, k2.name, dev_f, dev_b, tol, report.conjugate)
    return report


def sonine_check(k1: Kernel, k2: Kernel, t_grid, tol: Optional[float] = None) -> CheckResult:
    """integral_0^t K1(t - s) K2(s) ds = 1 for convolution kernels with unit weight."""
    if not (k1.convolution and k2.convolution):
        raise DomainError(f"sonine_check needs convolution kernels, got {k1.name} and {k2.name}")
    t = np.asarray(t_grid, dtype=float).ravel()
    if np.any(t <= 0.0):
        raise DomainError("sonine_check needs t > 0")
    tol = default_conjugacy_tol(k1, k2) if tol is None else tol
    w = unit_weight(0.0, float(np.max(t)))
    values = CompositionKernel(k1=k1, k2=k2, weight=w, tol=min(settings.quad_tol, 1e-3 * tol)).evaluate(
        np.zeros_like(t), t
    )
    residual = float(np.max(np.abs(values - 1.0)))
    return CheckResult(
        name=f"sonine {k1.name} * {k2.name}",
        residual=residual,
        tolerance=tol,
        passed=residual <= tol,
        detail={"t": t.tolist(), "convolution": values.tolist()},
    )
