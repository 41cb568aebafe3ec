import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import special

from sonine.bvp import (
    BvpProblem,
    check_continuity,
    contraction_constant,
    estimate_lipschitz,
    manufactured_problem,
    picard_solve,
    verify_solution,
)
from sonine.errors import ContractionViolated, MaxIterExceeded
from sonine.operators import one
from sonine.specfun import volterra_mass


def constant_rhs(t, u):
    return np.ones(np.broadcast(np.asarray(t), np.asarray(u)).shape)


def affine_rhs(t, u):
    return 0.5 * np.asarray(u) + 1.0


def mittag_leffler_solution(alpha: float, lam: float, t: float, terms: int = 80) -> float:
    """u = I^alpha (lam u + 1) in closed form: sum_n lam**n t**((n+1) alpha) / Gamma((n+1) alpha + 1)."""
    n = np.arange(terms)
    return float(np.sum(lam ** n * t ** ((n + 1) * alpha) / special.gamma((n + 1) * alpha + 1.0)))


def test_constant_rhs(rl_context):
    problem = BvpProblem.uniform(rl_context, constant_rhs, lipschitz=0.0, n=33, rhs_name="one")
    solution = picard_solve(problem)
    assert solution.converged
    assert solution.iterations <= 3
    assert solution.u(1.0) == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-8)
    np.testing.assert_allclose(solution.u.array(), 2.0 * np.sqrt(problem.mesh_array()) / math.sqrt(math.pi),
                               rtol=1e-8, atol=1e-14)


def test_contraction_constant(rl_context):
    problem = BvpProblem.uniform(rl_context, affine_rhs, lipschitz=0.5, n=17)
    assert contraction_constant(problem) == pytest.approx(0.5 * 2.0 / math.sqrt(math.pi), rel=1e-8)


def test_solver_refuses_without_contraction(rl_context):
    problem = BvpProblem.uniform(rl_context, lambda t, u: np.asarray(u), lipschitz=1.0, n=17)
    with pytest.raises(ContractionViolated) as excinfo:
        picard_solve(problem)
    assert excinfo.value.constant == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-8)
    assert excinfo.value.exit_code == 2


def test_affine_rhs_matches_series(rl_context):
    problem = BvpProblem.uniform(rl_context, affine_rhs, lipschitz=0.5, n=65)
    solution = picard_solve(problem, tol=1e-10)
    assert solution.converged
    assert solution.fixed_point_defect < 1e-9
    assert solution.u(1.0) == pytest.approx(mittag_leffler_solution(0.5, 0.5, 1.0), abs=2e-3)
    # geometric decay of the Picard differences
    history = np.asarray(solution.residual_history)
    assert np.all(history[2:] < history[1:-1])
    # each step shrinks by at most the contraction constant; tiny steps are round-off
    ratios = history[1:] / history[:-1]
    assert np.all(ratios[history[:-1] > 1e-12] <= solution.contraction_constant + 1e-4)


@pytest.mark.slow
def test_volterra_kernel_constant_rhs(volterra_ctx):
    problem = BvpProblem.uniform(volterra_ctx, constant_rhs, lipschitz=0.0, n=17, rhs_name="one")
    solution = picard_solve(problem)
    assert solution.converged
    mesh = problem.mesh_array()
    np.testing.assert_allclose(solution.u.array()[1:], volterra_mass(mesh[1:]), rtol=1e-6)
    assert solution.u.array()[0] == 0.0


@pytest.mark.slow
def test_volterra_kernel_affine_rhs(volterra_ctx):
    problem = BvpProblem.uniform(volterra_ctx, affine_rhs, lipschitz=0.5, n=17)
    solution = picard_solve(problem, tol=1e-10)
    assert solution.converged
    assert solution.contraction_constant == pytest.approx(0.5 * volterra_mass(1.0), rel=1e-6)
    assert solution.contraction_constant < 1.0
    assert solution.fixed_point_defect < 1e-9
    history = np.asarray(solution.residual_history)
    ratios = history[1:] / history[:-1]
    assert np.all(ratios[history[:-1] > 1e-12] <= solution.contraction_constant + 1e-4)


def test_start_value_does_not_change_the_fixed_point(rl_context):
    problem = BvpProblem.uniform(rl_context, affine_rhs, lipschitz=0.5, n=17)
    from_zero = picard_solve(problem, tol=1e-11)
    from_one = picard_solve(problem, tol=1e-11, u0=1.0)
    np.testing.assert_allclose(from_one.u.array(), from_zero.u.array(), atol=1e-9)


def test_iteration_cap(rl_context):
    problem = BvpProblem.uniform(rl_context, affine_rhs, lipschitz=0.5, n=17)
    with pytest.raises(MaxIterExceeded) as excinfo:
        picard_solve(problem, tol=1e-15, max_iter=2)
    best = excinfo.value.best
    assert best.iterations == 2
    assert not best.converged
    assert excinfo.value.exit_code == 3


def test_problem_needs_conjugate(unit_context):
    with pytest.raises(ValidationError):
        BvpProblem(ctx=unit_context, rhs=constant_rhs, lipschitz=0.0)


def test_problem_mesh_must_span_interval(rl_context):
    with pytest.raises(ValidationError):
        BvpProblem(ctx=rl_context, rhs=constant_rhs, lipschitz=0.0, mesh=[0.0, 0.5, 0.9])
    with pytest.raises(ValidationError):
        BvpProblem(ctx=rl_context, rhs=constant_rhs, lipschitz=-1.0)


def test_default_mesh(rl_context):
    problem = BvpProblem(ctx=rl_context, rhs=constant_rhs, lipschitz=0.0)
    assert len(problem.mesh) == 257
    assert problem.mesh[0] == 0.0 and problem.mesh[-1] == 1.0


@pytest.mark.slow
def test_manufactured_solution(rl_context):
    problem, exact = manufactured_problem(rl_context, n=129)
    solution = picard_solve(problem)
    mesh = problem.mesh_array()
    assert np.max(np.abs(solution.u.array() - exact(mesh))) < 5e-4
    check = verify_solution(problem, solution)
    assert check.passed
    assert abs(check.detail["boundary_value"]) < 1e-3


def test_estimate_lipschitz():
    assert estimate_lipschitz(lambda t, u: 0.5 * np.sin(u)) == pytest.approx(0.5, rel=1e-2)
    assert estimate_lipschitz(constant_rhs) == 0.0


def test_check_continuity(rl_context):
    result = check_continuity(rl_context, {"one": one, "cos": np.cos}, np.linspace(0.0, 1.0, 9))
    assert result.passed
    assert set(result.detail) == {"one", "cos"}
