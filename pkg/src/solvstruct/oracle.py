"""Independent numerical validation.

Classic fourth-order one-step integration of the ODE (and covering) flow
with per-step halving until the step-doubling estimate is small, drift
checks of first integrals along trajectories, residual checks of explicit
solutions, and finite-difference validation of symbolic derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .covering import CoveringSystem
from .geometry import OdeProblem, total_derivative_field
from .covering import covering_total_derivative
from .symbolic.expr import Expr, add, diff, mul, neg, sym
from .symbolic.numeric import DEFAULT_BASE_POINT, DomainError, compile_expr, eval_numeric

DRIFT_TOL = 1e-6
STEP_TOL = 1e-9
MAX_HALVINGS = 14
SKIP_FRACTION = 0.05


class SingularTrajectory(ArithmeticError):
    def __init__(self, message, last_x):
        super().__init__(message)
        self.last_x = last_x


@dataclass
class Trajectory:
    states: list          # list of dicts, each binding every chart name
    step: float
    method: str = "rk4-step-doubling"

    @property
    def xs(self):
        return [s["x"] for s in self.states]

    def __len__(self):
        return len(self.states)


def _flow_functions(problem):
    if isinstance(problem, CoveringSystem):
        flow = covering_total_derivative(problem)
    else:
        flow = total_derivative_field(problem)
    chart = flow.chart
    names = [n for n in chart.names if n != "x"]
    fns = [compile_expr(flow.component(n)) for n in names]
    return names, fns


def integrate_trajectory(problem, init: dict, span: float, step: float) -> Trajectory:
    """Integrate from init over [x0, x0 + span] with samples every `step`.

    Each coarse step is refined by halving until the step-doubling error
    estimate drops below STEP_TOL."""
    names, fns = _flow_functions(problem)

    def rhs(x, y):
        env = {"x": x}
        env.update(zip(names, y))
        try:
            return [f(env) for f in fns]
        except DomainError as exc:
            raise SingularTrajectory("singular right-hand side: %s" % exc, x) from exc

    def rk4(x, y, h):
        k1 = rhs(x, y)
        k2 = rhs(x + h / 2, [yi + h / 2 * ki for yi, ki in zip(y, k1)])
        k3 = rhs(x + h / 2, [yi + h / 2 * ki for yi, ki in zip(y, k2)])
        k4 = rhs(x + h, [yi + h * ki for yi, ki in zip(y, k3)])
        return [yi + h / 6 * (a + 2 * b + 2 * c + d)
                for yi, a, b, c, d in zip(y, k1, k2, k3, k4)]

    def step_to(x, y, h, depth=0):
        full = rk4(x, y, h)
        half = rk4(x + h / 2, rk4(x, y, h / 2), h / 2)
        err = max(abs(a - b) for a, b in zip(full, half))
        scale = 1.0 + max(abs(v) for v in half)
        if err < STEP_TOL * scale or depth >= MAX_HALVINGS:
            return half
        mid = step_to(x, y, h / 2, depth + 1)
        return step_to(x + h / 2, mid, h / 2, depth + 1)

    x0 = float(init["x"])
    y = [float(init[n]) for n in names]
    states = [dict(init)]
    n_steps = max(1, int(round(abs(span) / step)))
    h = span / n_steps
    x = x0
    for _ in range(n_steps):
        y = step_to(x, y, h)
        x += h
        if any(not math.isfinite(v) for v in y):
            raise SingularTrajectory("state diverged", x)
        s = {"x": x}
        s.update(zip(names, y))
        states.append(s)
    return Trajectory(states, step=h)


@dataclass
class DriftReport:
    drift: float
    reference: float
    skipped: int
    total: int
    passed: bool

    def __repr__(self):
        return "DriftReport(drift=%.3e, passed=%s, skipped=%d/%d)" % (
            self.drift, self.passed, self.skipped, self.total)


def check_first_integral(I: Expr, traj: Trajectory, constants: dict | None = None,
                         tol: float = DRIFT_TOL,
                         base_point: float = DEFAULT_BASE_POINT) -> DriftReport:
    """Maximal relative drift of I along the trajectory; constants are bound
    from `constants` (e.g. fixed from the initial sample)."""
    constants = constants or {}
    fn = compile_expr(I, base_point)
    ref = None
    drift = 0.0
    skipped = 0
    used = 0
    for s in traj.states:
        env = dict(constants)
        env.update(s)
        try:
            v = fn(env)
        except (DomainError, OverflowError, ZeroDivisionError):
            skipped += 1
            continue
        if ref is None:
            ref = v
            used += 1
            continue
        used += 1
        drift = max(drift, abs(v - ref) / max(1.0, abs(ref)))
    total = len(traj.states)
    if ref is None:
        return DriftReport(math.inf, math.nan, skipped, total, False)
    passed = drift < tol and skipped <= SKIP_FRACTION * total
    return DriftReport(drift, ref, skipped, total, passed)


def fix_constants_from_point(integrals, point: dict,
                             base_point: float = DEFAULT_BASE_POINT) -> dict:
    """Bind each integral's constant by evaluating it at a point, in cascade
    order (later integrals may reference the constants of earlier ones)."""
    bound: dict = {}
    for fi in integrals:
        env = dict(bound)
        env.update(point)
        bound[fi.constant] = eval_numeric(fi.expr, env, base_point)
    return bound


@dataclass
class ResidualReport:
    max_residual: float
    skipped: int
    total: int
    passed: bool

    def __repr__(self):
        return "ResidualReport(max=%.3e, passed=%s, skipped=%d/%d)" % (
            self.max_residual, self.passed, self.skipped, self.total)


def check_solution(u_expr: Expr, problem, points, constants: dict | None = None,
                   tol: float = DRIFT_TOL,
                   base_point: float = DEFAULT_BASE_POINT) -> ResidualReport:
    """Substitute u(x) into the equation and measure |u_k - f| at sample
    points; unevaluated integrals are differentiated by the fundamental
    theorem and evaluated by quadrature."""
    if isinstance(problem, CoveringSystem):
        problem = problem.base
    constants = constants or {}
    k = problem.order
    derivs = [u_expr]
    for _ in range(k):
        derivs.append(diff(derivs[-1], "x"))
    chart_names = problem.chart.names
    f = problem.f
    skipped = 0
    max_res = 0.0
    used = 0
    for x in points:
        env = dict(constants)
        env["x"] = float(x)
        try:
            vals = {"x": float(x)}
            for i, name in enumerate(chart_names[1:]):
                vals[name] = eval_numeric(derivs[i], env, base_point)
            uk = eval_numeric(derivs[k], env, base_point)
            env2 = dict(constants)
            env2.update(vals)
            fv = eval_numeric(f, env2, base_point)
        except (DomainError, OverflowError, ZeroDivisionError):
            skipped += 1
            continue
        used += 1
        max_res = max(max_res, abs(uk - fv))
    total = len(points)
    if used == 0:
        return ResidualReport(math.inf, skipped, total, False)
    passed = max_res < tol and skipped <= SKIP_FRACTION * total
    return ResidualReport(max_res, skipped, total, passed)


@dataclass
class FiniteDifferenceReport:
    max_rel_err: float
    passed: bool
    checked: int


def finite_difference_check(e: Expr, v: str, points, tol: float = 1e-6,
                            h: float = 1e-4,
                            base_point: float = DEFAULT_BASE_POINT) -> FiniteDifferenceReport:
    """Compare diff(e, v) against a five-point central stencil."""
    de = diff(e, v)
    max_err = 0.0
    checked = 0
    for p in points:
        try:
            exact = eval_numeric(de, p, base_point)

            def at(dx):
                q = dict(p)
                q[v] = q[v] + dx
                return eval_numeric(e, q, base_point)

            approx = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)
        except (DomainError, OverflowError, ZeroDivisionError):
            continue
        checked += 1
        scale = max(1.0, abs(exact))
        max_err = max(max_err, abs(approx - exact) / scale)
    return FiniteDifferenceReport(max_err, checked > 0 and max_err < tol, checked)
