"""Command-line front end.

Sub-commands:
- conjugacy: grid check that delta_{k,k'} = delta_{k',k} = 1
- apply: evaluate an operator on an x-grid
- verify: run a named identity suite
- converge: error ladders of the approximation theorems
- bvp: Picard solver for D_0^{k'} u = f(t, u)

Each command writes <command>.json (a RunReport) and, where tabular,
<command>.csv into --out. Exit codes: 0 pass, 2 hypothesis violated,
3 numerical budget exhausted or check failed, 4 config error.
"""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Type

import numpy as np
from pydantic import BaseModel, ValidationError

from sonine.bvp import BvpProblem, manufactured_problem, picard_solve, verify_solution
from sonine.config import settings
from sonine.errors import ConfigError, ContractionViolated, DomainError, MaxIterExceeded, SonineError
from sonine.kernels import check_conjugacy, make_pair, membership_report
from sonine.models import (
    ApplyConfig,
    BvpConfig,
    ConjugacyConfig,
    ConvergeConfig,
    ConvergeMode,
    KernelFamily,
    OperatorName,
    RunReport,
    Side,
    VerifyConfig,
)
from sonine.operators import (
    approx_identity_error,
    derivative_approx_error,
    frac_derivative_left,
    frac_derivative_right,
    frac_integral_type1_left,
    frac_integral_type1_right,
    frac_integral_type2_left,
    frac_integral_type2_right,
    left_derivative,
    left_integral,
    plain_context,
    right_derivative,
    right_integral,
    sweep,
)
from sonine.registry import get_expression, get_rhs, tolerance_table
from sonine.repository import ReportRepository
from sonine.suites import run_suite, suite_context
from sonine.utils import evaluation_grid, parse_float_list, strictly_decreasing

logger = logging.getLogger(__name__)


class CommandOutcome(BaseModel):
    inputs: Dict[str, Any]
    outputs: Dict[str, Any]
    passed: bool = True
    exit_code: int = 0
    header: Optional[List[str]] = None
    rows: Optional[List[List[Any]]] = None


class SonineCLI:
    """One method per sub-command; each returns the outcome the report is built from."""

    def __init__(self, out_dir: str, config: Optional[Dict[str, Any]] = None):
        self.out_dir = Path(out_dir)
        self.config = config or {}

    def resolve(self, model: Type[BaseModel], flags: Dict[str, Any]) -> BaseModel:
        """Config file values overridden by the flags that were given."""
        data = dict(self.config)
        given = {key: value for key, value in flags.items() if value is not None}
        if "with_family" in given:
            data.pop("with", None)
        data.update(given)
        known = set(model.model_fields) | {"with"}
        try:
            return model.model_validate({key: value for key, value in data.items() if key in known})
        except ValidationError as exc:
            raise ConfigError(f"Invalid {model.__name__}: {exc}") from exc

    def conjugacy(self, cfg: ConjugacyConfig) -> CommandOutcome:
        pair = make_pair(cfg)
        if pair.conjugate is None:
            raise ConfigError(f"family {cfg.family.value} has no conjugate; name a partner with --with")
        report = check_conjugacy(pair.kernel, pair.conjugate, pair.weight, grid_size=cfg.grid, tol=cfg.tol)
        membership = [membership_report(k, pair.weight) for k in (pair.kernel, pair.conjugate)]
        rows = [[p.x, p.y, p.forward, p.backward] for p in report.points]
        return CommandOutcome(
            inputs=cfg.model_dump(mode="json", by_alias=True),
            outputs={
                "conjugacy": report.model_dump(mode="json", exclude={"points"}),
                "membership": [m.model_dump(mode="json", exclude={"y_fk", "fk", "y_gk", "gk"}) for m in membership],
            },
            passed=report.conjugate,
            exit_code=0 if report.conjugate else 2,
            header=["x", "y", "delta_forward", "delta_backward"],
            rows=rows,
        )

    def _function(self, cfg: ApplyConfig):
        if cfg.csv is not None:
            return ReportRepository.read_grid_function(cfg.csv), None
        expr = get_expression(cfg.f)
        return expr.value, expr.derivative

    def apply(self, cfg: ApplyConfig) -> CommandOutcome:
        f, df = self._function(cfg)
        op = cfg.op
        if op in (OperatorName.D0THETA, OperatorName.D1THETA):
            return self._apply_theta(cfg, f, df)

        if op in (OperatorName.ILEFT, OperatorName.IRIGHT, OperatorName.DLEFT, OperatorName.DRIGHT):
            pair = make_pair(cfg)
            if op in (OperatorName.DLEFT, OperatorName.DRIGHT):
                ctx = plain_context(pair.conjugate or pair.kernel, pair.weight)
            else:
                ctx = plain_context(pair.kernel, pair.weight)
            a, b = ctx.a, ctx.b
        else:
            a, b = 0.0, 1.0
        xs = evaluation_grid(a, b, cfg.grid)

        integrals = {
            OperatorName.H0: lambda x: frac_integral_type1_left(cfg.alpha, f, x, with_error=True),
            OperatorName.H1: lambda x: frac_integral_type1_right(cfg.alpha, f, x, with_error=True),
            OperatorName.S0: lambda x: frac_integral_type2_left(cfg.alpha, f, x, with_error=True),
            OperatorName.S1: lambda x: frac_integral_type2_right(cfg.alpha, f, x, with_error=True),
        }
        if op in integrals:
            rows = [list(row) for row in sweep(integrals[op], xs)]
        elif op == OperatorName.ILEFT:
            rows = [list(row) for row in sweep(lambda x: left_integral(ctx, f, x, with_error=True), xs)]
        elif op == OperatorName.IRIGHT:
            rows = [list(row) for row in sweep(lambda x: right_integral(ctx, f, x, with_error=True), xs)]
        else:
            derivative = left_derivative if op == OperatorName.DLEFT else right_derivative
            rows = self._pointwise(lambda x: derivative(ctx, f, x, with_error=True), xs)

        refused = [row[0] for row in rows if not np.isfinite(row[1])]
        return CommandOutcome(
            inputs=cfg.model_dump(mode="json", by_alias=True),
            outputs={"points": len(rows), "refused": refused},
            passed=not refused,
            header=["x", "value", "error_estimate"],
            rows=rows,
        )

    @staticmethod
    def _pointwise(evaluate, xs) -> List[List[Any]]:
        """Evaluate per point so endpoint refusals are reported per x."""
        rows = []
        for x in xs:
            try:
                value, error = evaluate(float(x))
            except DomainError as exc:
                logger.warning("x=%r refused: %s", float(x), exc)
                value, error = float("nan"), float("nan")
            rows.append([float(x), float(value), float(error)])
        return rows

    def _apply_theta(self, cfg: ApplyConfig, f, df) -> CommandOutcome:
        run = frac_derivative_left if cfg.op == OperatorName.D0THETA else frac_derivative_right
        rows, refused = [], []
        for x in evaluation_grid(0.0, 1.0, cfg.grid):
            try:
                result = run(cfg.theta, f, float(x), df=df)
                rows.append([result.x, result.direct, result.representation])
            except DomainError as exc:
                logger.warning("x=%r refused: %s", float(x), exc)
                refused.append(float(x))
                rows.append([float(x), float("nan"), None])
        gaps = [abs(r[1] - r[2]) for r in rows if r[2] is not None and np.isfinite(r[1])]
        return CommandOutcome(
            inputs=cfg.model_dump(mode="json", by_alias=True),
            outputs={"refused": refused, "max_direct_vs_representation": max(gaps) if gaps else None},
            header=["x", "direct", "representation"],
            rows=rows,
        )

    def verify(self, cfg: VerifyConfig) -> CommandOutcome:
        results = run_suite(cfg.suite, cfg, theta=cfg.theta, points=cfg.points)
        passed = all(r.passed for r in results)
        return CommandOutcome(
            inputs=cfg.model_dump(mode="json", by_alias=True),
            outputs={"checks": [r.model_dump(mode="json") for r in results]},
            passed=passed,
            exit_code=0 if passed else 3,
            header=["check", "residual", "tolerance", "passed"],
            rows=[[r.name, r.residual, r.tolerance, r.passed] for r in results],
        )

    def converge(self, cfg: ConvergeConfig) -> CommandOutcome:
        expr = get_expression(cfg.f)
        rows = []
        if cfg.mode in (ConvergeMode.S0, ConvergeMode.S1):
            side = Side.LEFT if cfg.mode == ConvergeMode.S0 else Side.RIGHT
            for alpha in cfg.alphas:
                rows.append([alpha, approx_identity_error(expr.value, alpha, side)])
            label = "alpha"
        else:
            side = Side.LEFT if cfg.mode == ConvergeMode.D0 else Side.RIGHT
            for theta in cfg.thetas:
                rows.append([theta, derivative_approx_error(expr.value, expr.derivative, theta, side)])
            label = "theta"
        errors = [row[1] for row in rows]
        vanishing = all(e == 0.0 for e in errors)
        monotone = vanishing or strictly_decreasing(errors)
        if not monotone:
            logger.warning("convergence ladder for %s is not strictly decreasing: %s", cfg.mode.value, errors)
        return CommandOutcome(
            inputs=cfg.model_dump(mode="json"),
            outputs={"errors": errors, "monotone": monotone},
            passed=monotone,
            exit_code=0 if monotone else 3,
            header=[label, "l1_error"],
            rows=rows,
        )

    def bvp(self, cfg: BvpConfig) -> CommandOutcome:
        if cfg.family == KernelFamily.UNIT and cfg.with_family is None:
            raise ConfigError("the unit family has no conjugate kernel; pass --with")
        ctx = suite_context(cfg)
        n = cfg.mesh or settings.bvp_mesh_size
        outputs: Dict[str, Any] = {}
        if cfg.manufactured:
            lam = 0.2 if cfg.lipschitz is None else cfg.lipschitz
            problem, exact = manufactured_problem(ctx, lam=lam, n=n)
        else:
            rhs = get_rhs(cfg.rhs)
            lipschitz = rhs.lipschitz if cfg.lipschitz is None else cfg.lipschitz
            problem, exact = BvpProblem.uniform(ctx, rhs.value, lipschitz, n=n, rhs_name=cfg.rhs), None

        solution = picard_solve(problem, tol=cfg.tol, max_iter=cfg.max_iter)
        outputs["solution"] = solution.to_report()
        outputs["u_at_b"] = solution.u.values[-1]
        check = verify_solution(problem, solution)
        outputs["verification"] = check.model_dump(mode="json")
        passed = True
        if exact is not None:
            error = float(np.max(np.abs(solution.u.array() - exact(np.asarray(solution.u.mesh)))))
            outputs["sup_error"] = error
            passed = error <= 5e-4
        return CommandOutcome(
            inputs=cfg.model_dump(mode="json", by_alias=True),
            outputs=outputs,
            passed=passed,
            exit_code=0 if passed else 3,
            header=["t", "u"],
            rows=solution.u.to_rows(),
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_kernel_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--family", help="Kernel family: unit, rl, hadamard, erdelyi_kober, e1, volterra")
    parser.add_argument("--alpha", type=float, help="Kernel order alpha")
    parser.add_argument("--sigma", type=float, help="Erdelyi-Kober sigma")
    parser.add_argument("--a", type=float, help="Left end of the interval")
    parser.add_argument("--b", type=float, help="Right end of the interval")
    parser.add_argument("--with", dest="with_family", help="Partner family instead of the conjugate")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sonine", description="Kernel-function fractional calculus toolkit")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the flags (flags win)")
    common.add_argument("--out", default=None, help=f"Output directory (default: {settings.output_dir})")
    common.add_argument("--log-level", default=None, help="Logging level (default: from settings)")
    sub = parser.add_subparsers(dest="command", required=True)

    conj = sub.add_parser("conjugacy", parents=[common], help="Check that two kernels are conjugate")
    _add_kernel_flags(conj)
    conj.add_argument("--grid", type=int, help="Triangular grid size (default 20)")
    conj.add_argument("--tol", type=float, help="Deviation tolerance")

    app = sub.add_parser("apply", parents=[common], help="Evaluate an operator on an x-grid")
    _add_kernel_flags(app)
    app.add_argument("--op", choices=[o.value for o in OperatorName])
    app.add_argument("--theta", type=float)
    app.add_argument("--f", help="Registered expression name")
    app.add_argument("--csv", help="CSV file with x,value rows")
    app.add_argument("--grid", type=int)

    ver = sub.add_parser("verify", parents=[common], help="Run an identity suite")
    _add_kernel_flags(ver)
    ver.add_argument("--suite")
    ver.add_argument("--theta", type=float)
    ver.add_argument("--points", type=int)

    conv = sub.add_parser("converge", parents=[common], help="Approximation error ladders")
    conv.add_argument("--mode", choices=[m.value for m in ConvergeMode])
    conv.add_argument("--f")
    conv.add_argument("--alphas", type=parse_float_list)
    conv.add_argument("--thetas", type=parse_float_list)

    bvp = sub.add_parser("bvp", parents=[common], help="Solve D_0^{k'} u = f(t, u)")
    _add_kernel_flags(bvp)
    bvp.add_argument("--rhs")
    bvp.add_argument("--lipschitz", type=float)
    bvp.add_argument("--mesh", type=int)
    bvp.add_argument("--tol", type=float)
    bvp.add_argument("--max-iter", dest="max_iter", type=int)
    bvp.add_argument("--manufactured", action="store_true", default=None)
    return parser


_CONFIGS = {
    "conjugacy": ConjugacyConfig,
    "apply": ApplyConfig,
    "verify": VerifyConfig,
    "converge": ConvergeConfig,
    "bvp": BvpConfig,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"sonine: {exc}", file=sys.stderr)
        return exc.exit_code
    level = (args.log_level or settings.log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    out_dir = args.out or settings.output_dir
    flags = {key: value for key, value in vars(args).items()
             if key not in ("command", "config", "out", "log_level")}
    started = time.perf_counter()
    inputs: Dict[str, Any] = {key: value for key, value in flags.items() if value is not None}
    outcome: Optional[CommandOutcome] = None
    outputs: Dict[str, Any] = {}
    exit_code = 0
    logger.info("sonine %s started", args.command)
    try:
        config = ReportRepository.load_json_config(args.config) if args.config else {}
        cli = SonineCLI(out_dir, config)
        cfg = cli.resolve(_CONFIGS[args.command], flags)
        inputs = cfg.model_dump(mode="json", by_alias=True)
        outcome = getattr(cli, args.command)(cfg)
        exit_code = outcome.exit_code
    except ContractionViolated as exc:
        logger.error("%s", exc)
        outputs = {"error": str(exc), "contraction_constant": exc.constant}
        exit_code = exc.exit_code
    except MaxIterExceeded as exc:
        logger.error("%s", exc)
        outputs = {"error": str(exc), "solution": exc.best.to_report() if exc.best is not None else None}
        exit_code = exc.exit_code
    except SonineError as exc:
        logger.error("%s", exc)
        outputs = {"error": str(exc), "error_type": type(exc).__name__}
        exit_code = exc.exit_code

    if outcome is not None:
        inputs, outputs = outcome.inputs, outcome.outputs
    report = RunReport(
        command=args.command,
        inputs=inputs,
        outputs=outputs,
        tolerances=tolerance_table(),
        wall_time=time.perf_counter() - started,
        passed=exit_code == 0,
        exit_code=exit_code,
    )
    path = ReportRepository.save_report(report, out_dir)
    if outcome is not None and outcome.rows is not None:
        ReportRepository.write_table(outcome.rows, outcome.header, Path(out_dir) / f"{args.command}.csv")
    logger.info("sonine %s finished with exit code %d; report at %s", args.command, exit_code, path)
    return exit_code


def main(argv: Optional[Sequence[str]] = None):
    """Main entry point."""
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
