"""Picard solver for D_0^{k'} u = f(t, u) with (I_0^{k'} u)(0) = 0.

The problem is solved through its fixed-point form u = I_0^k f(., u(.)),
which is a contraction whenever c_f * sup(I_0^k 1) < 1.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from sonine.config import settings
from sonine.errors import ContractionViolated, DomainError, MaxIterExceeded
from sonine.models import BvpSolution, CheckResult, GridFunction, Side
from sonine.operators import (
    OperatorContext,
    as_function,
    boundary_value,
    left_derivative,
    left_integral_on_mesh,
    one,
)

logger = logging.getLogger(__name__)

Start = Union[float, Callable, GridFunction]


class BvpProblem(BaseModel):
    """Conjugate pair (k, k'), right-hand side f(t, u), its Lipschitz constant and the solver mesh."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    ctx: OperatorContext
    rhs: Callable
    lipschitz: float = Field(ge=0.0)
    mesh: Optional[List[float]] = None
    rhs_name: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.ctx.conjugate is None:
            raise ValueError("a boundary value problem needs a context with a conjugate kernel")
        if self.mesh is None:
            self.mesh = np.linspace(self.ctx.a, self.ctx.b, settings.bvp_mesh_size).tolist()
        mesh = np.asarray(self.mesh, dtype=float)
        if mesh.size < 3 or np.any(np.diff(mesh) <= 0.0):
            raise ValueError("mesh needs at least 3 strictly increasing points")
        if mesh[0] != self.ctx.a or mesh[-1] != self.ctx.b:
            raise ValueError(f"mesh must span [{self.ctx.a}, {self.ctx.b}], got [{mesh[0]}, {mesh[-1]}]")
        return self

    @classmethod
    def uniform(cls, ctx: OperatorContext, rhs: Callable, lipschitz: float,
                n: Optional[int] = None, rhs_name: Optional[str] = None) -> "BvpProblem":
        n = settings.bvp_mesh_size if n is None else n
        return cls(ctx=ctx, rhs=rhs, lipschitz=lipschitz,
                   mesh=np.linspace(ctx.a, ctx.b, n).tolist(), rhs_name=rhs_name)

    def mesh_array(self) -> np.ndarray:
        return np.asarray(self.mesh, dtype=float)


def contraction_constant(problem: BvpProblem) -> float:
    """C = c_f * max over the mesh of (I_0^k 1)."""
    sup = float(np.max(left_integral_on_mesh(problem.ctx, one, problem.mesh_array(), adaptive=True)))
    constant = problem.lipschitz * sup
    logger.info("contraction constant %.6g (c_f=%g, sup I^k 1=%.6g)", constant, problem.lipschitz, sup)
    return constant


def _start(u0: Optional[Start], mesh: np.ndarray) -> np.ndarray:
    if u0 is None:
        return np.zeros_like(mesh)
    return np.asarray(as_function(u0)(mesh), dtype=float).copy()


def _picard_map(problem: BvpProblem, mesh: np.ndarray, u: np.ndarray) -> np.ndarray:
    iterate = GridFunction(mesh=mesh.tolist(), values=u.tolist())

    def g(t):
        return problem.rhs(t, iterate(t))

    nodes = np.asarray(g(mesh), dtype=float)
    if not np.all(np.isfinite(nodes)):
        bad = mesh[~np.isfinite(nodes)][0]
        raise DomainError(f"right-hand side {problem.rhs_name or 'f'} is not finite at t={bad!r}")
    return left_integral_on_mesh(problem.ctx, g, mesh)


def picard_solve(problem: BvpProblem, tol: Optional[float] = None, max_iter: Optional[int] = None,
                 u0: Optional[Start] = None) -> BvpSolution:
    """Iterate u_{n+1} = I_0^k f(., u_n) on the mesh until successive iterates agree to tol."""
    tol = settings.bvp_tol if tol is None else tol
    max_iter = settings.bvp_max_iter if max_iter is None else max_iter
    constant = contraction_constant(problem)
    if constant >= 1.0:
        raise ContractionViolated(constant)

    mesh = problem.mesh_array()
    u = _start(u0, mesh)
    history: List[float] = []
    converged = False
    for iteration in range(1, max_iter + 1):
        new = _picard_map(problem, mesh, u)
        diff = float(np.max(np.abs(new - u)))
        history.append(diff)
        u = new
        logger.debug("picard iteration %d: sup difference %.3e", iteration, diff)
        if diff <= tol:
            converged = True
            break

    defect = float(np.max(np.abs(u - _picard_map(problem, mesh, u))))
    solution = BvpSolution(
        u=GridFunction(mesh=mesh.tolist(), values=u.tolist()),
        iterations=len(history),
        residual_history=history,
        contraction_constant=constant,
        fixed_point_defect=defect,
        converged=converged,
    )
    if not converged:
        raise MaxIterExceeded(
            f"Picard iteration stopped after {max_iter} iterations with difference {history[-1]:.3g} above tol={tol}",
            best=solution,
        )
    logger.info("picard converged in %d iterations (defect %.3g, C=%.4g)", solution.iterations, defect, constant)
    return solution


def manufactured_problem(ctx: OperatorContext, exact: Callable = np.square, lam: float = 0.2,
                         n: Optional[int] = None) -> Tuple[BvpProblem, Callable]:
    """Problem whose solution is `exact`: f(t, u) = lam (u - exact(t)) + D_0^{k'} exact(t).

    exact must vanish at 0 so that (I_0^{k'} exact)(0) = 0.
    """
    n = settings.bvp_mesh_size if n is None else n
    mesh = np.linspace(ctx.a, ctx.b, n)
    forcing = np.asarray(left_derivative(ctx.dual(), exact, mesh, user=False), dtype=float)
    g = GridFunction(mesh=mesh.tolist(), values=forcing.tolist(), interp_order=3)

    def rhs(t, u):
        return lam * (u - exact(t)) + g(t)

    problem = BvpProblem(ctx=ctx, rhs=rhs, lipschitz=abs(lam), mesh=mesh.tolist(), rhs_name="manufactured")
    return problem, exact


def verify_solution(problem: BvpProblem, solution: BvpSolution, points: Optional[Sequence[float]] = None,
                    tol: float = 1e-3) -> CheckResult:
    """Sup of |D_0^{k'} u - f(., u)| on interior points and the boundary value (I_0^{k'} u)(0)."""
    ctx = problem.ctx
    points = np.linspace(ctx.a + 0.1 * (ctx.b - ctx.a), ctx.b - 0.1 * (ctx.b - ctx.a), 9) if points is None \
        else np.asarray(points, dtype=float)
    u = GridFunction(mesh=solution.u.mesh, values=solution.u.values, interp_order=3)
    dual = ctx.dual()
    lhs = np.asarray(left_derivative(dual, u, points, user=False), dtype=float)
    rhs = np.asarray(problem.rhs(points, u(points)), dtype=float)
    residual = float(np.max(np.abs(lhs - rhs)))
    boundary = boundary_value(dual, u, Side.LEFT)
    worst = max(residual, abs(boundary))
    return CheckResult(
        name="bvp",
        residual=worst,
        tolerance=tol,
        passed=worst <= tol,
        detail={"equation_residual": residual, "boundary_value": boundary, "points": points.tolist()},
    )


def estimate_lipschitz(rhs: Callable, t_range: Tuple[float, float] = (0.0, 1.0),
                       u_range: Tuple[float, float] = (-2.0, 2.0), n: int = 41) -> float:
    """Largest difference quotient of f in u over a box; advisory only."""
    t = np.linspace(*t_range, n)
    u = np.linspace(*u_range, n)
    tt, uu = np.meshgrid(t, u, indexing="ij")
    values = np.asarray(rhs(tt, uu), dtype=float)
    quotients = np.abs(np.diff(values, axis=1)) / np.diff(u)[None, :]
    estimate = float(np.max(quotients))
    logger.info("estimated Lipschitz constant %.4g on t in %s, u in %s", estimate, t_range, u_range)
    return estimate


def check_continuity(ctx: OperatorContext, functions: Dict[str, Callable], mesh: Sequence[float]) -> CheckResult:
    """I_0^k maps the sample functions to continuous functions: adjacent jumps shrink when the mesh is refined."""
    coarse = np.asarray(mesh, dtype=float)
    fine = np.sort(np.concatenate([coarse, 0.5 * (coarse[1:] + coarse[:-1])]))
    detail = {}
    ok = True
    worst = 0.0
    for name, fn in functions.items():
        jump_coarse = float(np.max(np.abs(np.diff(left_integral_on_mesh(ctx, fn, coarse, adaptive=True)))))
        jump_fine = float(np.max(np.abs(np.diff(left_integral_on_mesh(ctx, fn, fine, adaptive=True)))))
        passed = jump_fine <= jump_coarse
        ok = ok and passed
        worst = max(worst, jump_fine)
        detail[name] = {"coarse_jump": jump_coarse, "fine_jump": jump_fine, "passed": passed}
    return CheckResult(name="continuity", residual=worst, tolerance=float("nan"), passed=ok, detail=detail)
