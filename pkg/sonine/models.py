from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy.interpolate import CubicSpline


class KernelFamily(str, Enum):
    UNIT = "unit"
    RL = "rl"
    HADAMARD = "hadamard"
    ERDELYI_KOBER = "erdelyi_kober"
    E1 = "e1"
    VOLTERRA = "volterra"


class WeightKind(str, Enum):
    UNIT = "unit"
    RECIPROCAL = "reciprocal"  # 1/x
    POWER = "power"  # sigma * x**(sigma - 1)
    CALLABLE = "callable"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class OperatorName(str, Enum):
    ILEFT = "ileft"
    IRIGHT = "iright"
    DLEFT = "dleft"
    DRIGHT = "dright"
    H0 = "h0"
    H1 = "h1"
    S0 = "s0"
    S1 = "s1"
    D0THETA = "d0theta"
    D1THETA = "d1theta"


class SuiteName(str, Enum):
    COMPOSITION = "composition"
    INVERSION = "inversion"
    RANGE = "range"
    DEFECT = "defect"
    IBP = "ibp"
    COMPHS = "comphs"
    CHT = "cht"
    TYPE2IBP = "type2ibp"
    RIPGD = "ripgd"
    REPRESENTATION = "representation"
    SONINE = "sonine"


class ConvergeMode(str, Enum):
    S0 = "s0"
    S1 = "s1"
    D0 = "d0"
    D1 = "d1"


class SpecFunConfig(BaseModel):
    """Tolerances for the special-function evaluations."""
    model_config = ConfigDict(frozen=True)

    series_tolerance: float = Field(default=1e-12, gt=0.0, le=1e-3)
    max_terms: int = Field(default=384, ge=50)
    tail_cutoff: float = Field(default=2000.0, gt=0.0)


class VolterraEvaluation(BaseModel):
    """One evaluation of the Volterra function with its truncation evidence."""
    lam: float
    value: float
    t_lo: float
    t_hi: float
    left_tail_bound: float
    right_tail_bound: float
    nodes: int


class SingularSpec(BaseModel):
    """Endpoint behaviour of an integrand on [a, b]."""
    model_config = ConfigDict(frozen=True)

    left_exponent: float = Field(default=0.0, ge=0.0, lt=1.0)
    right_exponent: float = Field(default=0.0, ge=0.0, lt=1.0)
    left_log: bool = False
    right_log: bool = False

    def mirrored(self) -> "SingularSpec":
        return SingularSpec(
            left_exponent=self.right_exponent,
            right_exponent=self.left_exponent,
            left_log=self.right_log,
            right_log=self.left_log,
        )


class QuadResult(BaseModel):
    value: float
    error_estimate: float = Field(ge=0.0)
    evaluations: int
    converged: bool = True


class MembershipReport(BaseModel):
    kernel: str
    sup_fk: float
    sup_gk: float
    grid_size: int
    passes: bool
    y_fk: List[float] = []
    fk: List[float] = []
    y_gk: List[float] = []
    gk: List[float] = []
    closed_form_sup_fk: Optional[float] = None
    closed_form_sup_gk: Optional[float] = None
    failures: List[str] = []


class ConjugacyPoint(BaseModel):
    x: float
    y: float
    forward: float
    backward: float


class ConjugacyReport(BaseModel):
    kernel: str
    conjugate_kernel: str
    max_dev_forward: float
    max_dev_backward: float
    tolerance: float
    conjugate: bool
    points: List[ConjugacyPoint] = []
    failures: List[str] = []

    @model_validator(mode="after")
    def _verdict_matches_deviations(self):
        expected = (
            bool(np.isfinite(self.max_dev_forward) and np.isfinite(self.max_dev_backward))
            and self.max_dev_forward <= self.tolerance
            and self.max_dev_backward <= self.tolerance
        )
        if self.conjugate and not expected:
            raise ValueError(
                f"conjugate={self.conjugate} disagrees with deviations "
                f"({self.max_dev_forward:.3g}, {self.max_dev_backward:.3g}) at tolerance {self.tolerance:.3g}"
            )
        return self


class KernelSpec(BaseModel):
    """Kernel definition as read from a JSON config."""
    family: KernelFamily = KernelFamily.RL
    alpha: float = 0.5
    sigma: float = 1.0
    a: Optional[float] = None
    b: Optional[float] = None
    with_family: Optional[KernelFamily] = Field(default=None, alias="with")

    model_config = ConfigDict(populate_by_name=True)

    @field_validator("family", "with_family", mode="before")
    @classmethod
    def normalise_family(cls, v):
        if isinstance(v, str):
            v = v.lower().strip().replace("-", "_")
            if v in ["riemann_liouville", "riemann", "rl"]:
                return "rl"
            if v in ["ek", "erdelyi", "kober"]:
                return "erdelyi_kober"
            if v in ["exp_integral", "expint"]:
                return "e1"
            return v
        return v


class GridFunction(BaseModel):
    """A real function sampled on a strictly increasing mesh."""
    model_config = ConfigDict(frozen=True)

    mesh: List[float]
    values: List[float]
    interp_order: int = 1

    _spline: Optional[CubicSpline] = PrivateAttr(default=None)

    @field_validator("interp_order")
    @classmethod
    def supported_order(cls, v):
        if v not in (1, 3):
            raise ValueError(f"interp_order must be 1 or 3, got {v}")
        return v

    @model_validator(mode="after")
    def _check_mesh(self):
        if len(self.mesh) != len(self.values):
            raise ValueError(f"mesh has {len(self.mesh)} points but values has {len(self.values)}")
        if len(self.mesh) < 2:
            raise ValueError("a GridFunction needs at least two mesh points")
        if np.any(np.diff(self.mesh) <= 0.0):
            raise ValueError("mesh must be strictly increasing")
        return self

    @classmethod
    def from_function(cls, f, mesh, interp_order: int = 1) -> "GridFunction":
        mesh = np.asarray(mesh, dtype=float)
        values = np.broadcast_to(np.asarray(f(mesh), dtype=float), mesh.shape)
        return cls(mesh=mesh.tolist(), values=values.tolist(), interp_order=interp_order)

    @property
    def a(self) -> float:
        return self.mesh[0]

    @property
    def b(self) -> float:
        return self.mesh[-1]

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interp_order == 1:
            return np.interp(t, self.mesh, self.values)
        if self._spline is None:
            self._spline = CubicSpline(self.mesh, self.values)
        return self._spline(t)

    def to_rows(self) -> List[List[float]]:
        return [[x, v] for x, v in zip(self.mesh, self.values)]


class CompositionResult(BaseModel):
    nested: List[float]
    direct: Optional[List[float]] = None


class DefectResult(BaseModel):
    x: float
    lhs: float
    predicted: float
    boundary_value: float
    defect: float


class FracDerivativeResult(BaseModel):
    x: float
    direct: float
    representation: Optional[float] = None


class CheckResult(BaseModel):
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: Dict[str, Any] = {}


class BvpSolution(BaseModel):
    u: GridFunction
    iterations: int
    residual_history: List[float]
    contraction_constant: float
    fixed_point_defect: float
    converged: bool = True

    def to_report(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "residual_history": self.residual_history,
            "contraction_constant": self.contraction_constant,
            "fixed_point_defect": self.fixed_point_defect,
            "converged": self.converged,
        }


class RunReport(BaseModel):
    command: str
    inputs: Dict[str, Any]
    outputs: Dict[str, Any]
    tolerances: Dict[str, Any]
    wall_time: float = Field(description="seconds")
    passed: bool = True
    exit_code: int = 0


# Command configurations: JSON config merged with command-line flags

class ConjugacyConfig(KernelSpec):
    grid: int = Field(default=20, ge=2)
    tol: Optional[float] = Field(default=None, gt=0.0)


class ApplyConfig(KernelSpec):
    op: OperatorName = OperatorName.ILEFT
    theta: float = 1.5
    f: str = "one"
    csv: Optional[str] = None
    grid: int = Field(default=11, ge=2)


class VerifyConfig(KernelSpec):
    suite: SuiteName = SuiteName.INVERSION
    theta: float = 1.5
    points: Optional[int] = Field(default=None, ge=1)


class ConvergeConfig(BaseModel):
    mode: ConvergeMode = ConvergeMode.S0
    f: str = "ident"
    alphas: List[float] = [0.2, 0.1, 0.05, 0.025]
    thetas: List[float] = [1.2, 1.1, 1.05]

    @field_validator("alphas", "thetas", mode="before")
    @classmethod
    def split_list(cls, v):
        if isinstance(v, str):
            return [float(part) for part in v.split(",") if part.strip()]
        return v


class BvpConfig(KernelSpec):
    rhs: str = "one"
    lipschitz: Optional[float] = Field(default=None, ge=0.0)
    mesh: Optional[int] = Field(default=None, ge=3)
    tol: Optional[float] = Field(default=None, gt=0.0)
    max_iter: Optional[int] = Field(default=None, ge=1)
    manufactured: bool = False
