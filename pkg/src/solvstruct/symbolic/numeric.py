"""Floating-point evaluation of expressions.

Unevaluated integrals are evaluated by adaptive quadrature from a base point
(default 1.0), so intg(f, x) at a point p means the integral of f from the
base point to p[x] with all other symbols frozen at p.
"""
from __future__ import annotations

import math

from .expr import Add, Call, Const, Expr, Integral, Mul, Pow, Sym
from .printer import to_str

DEFAULT_BASE_POINT = 1.0

QUAD_TOL = 1e-12


class DomainError(ArithmeticError):
    """Raised when evaluation leaves the real domain (ln of a non-positive
    value, division by zero, fractional power of a negative value, ...)."""

    def __init__(self, message: str, subexpr: Expr | None = None):
        if subexpr is not None:
            message = "%s in %s" % (message, to_str(subexpr))
        super().__init__(message)
        self.subexpr = subexpr


def eval_numeric(e: Expr, point: dict, base_point: float = DEFAULT_BASE_POINT) -> float:
    """Evaluate e at `point` (symbol name -> float)."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(point[e.name])
        except KeyError:
            raise DomainError("unbound symbol %r" % e.name, e) from None
    if isinstance(e, Add):
        return sum(eval_numeric(t, point, base_point) for t in e.terms)
    if isinstance(e, Mul):
        r = 1.0
        for f in e.factors:
            r *= eval_numeric(f, point, base_point)
        return r
    if isinstance(e, Pow):
        b = eval_numeric(e.base, point, base_point)
        x = eval_numeric(e.exp, point, base_point)
        if b == 0.0 and x < 0:
            raise DomainError("division by zero", e)
        if b < 0.0 and x != int(x):
            raise DomainError("fractional power of a negative value", e)
        try:
            return b ** x
        except OverflowError:
            raise DomainError("overflow", e) from None
        except ZeroDivisionError:
            raise DomainError("division by zero", e) from None
    if isinstance(e, Call):
        a = eval_numeric(e.arg, point, base_point)
        try:
            if e.fn == "exp":
                return math.exp(a)
            if e.fn == "ln":
                if a <= 0.0:
                    raise DomainError("ln of a non-positive value", e)
                return math.log(a)
            if e.fn == "sin":
                return math.sin(a)
            if e.fn == "cos":
                return math.cos(a)
            if e.fn == "arctan":
                return math.atan(a)
        except OverflowError:
            raise DomainError("overflow", e) from None
        raise DomainError("no numeric rule for %s" % e.fn, e)
    if isinstance(e, Integral):
        return _eval_integral(e, point, base_point)
    raise TypeError("cannot evaluate %r" % (e,))


def _eval_integral(e: Integral, point: dict, base_point: float) -> float:
    from scipy.integrate import quad

    upper = point.get(e.var)
    if upper is None:
        raise DomainError("unbound integration endpoint %r" % e.var, e)

    def f(t: float) -> float:
        p = dict(point)
        p[e.var] = t
        return eval_numeric(e.integrand, p, base_point)

    if upper == base_point:
        return 0.0
    val, err = quad(f, base_point, upper, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    if not math.isfinite(val):
        raise DomainError("quadrature diverged", e)
    return val


def compile_expr(e: Expr, base_point: float = DEFAULT_BASE_POINT):
    """Compile e into a fast callable env(dict) -> float."""
    if isinstance(e, Const):
        v = float(e.value)
        return lambda env: v
    if isinstance(e, Sym):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, Add):
        parts = [compile_expr(t, base_point) for t in e.terms]
        return lambda env: sum(p(env) for p in parts)
    if isinstance(e, Mul):
        parts = [compile_expr(f, base_point) for f in e.factors]

        def ev_mul(env):
            r = 1.0
            for p in parts:
                r *= p(env)
            return r

        return ev_mul
    if isinstance(e, Pow):
        fb = compile_expr(e.base, base_point)
        fx = compile_expr(e.exp, base_point)
        node = e

        def ev_pow(env):
            b = fb(env)
            x = fx(env)
            if b == 0.0 and x < 0:
                raise DomainError("division by zero", node)
            if b < 0.0 and x != int(x):
                raise DomainError("fractional power of a negative value", node)
            try:
                return b ** x
            except (OverflowError, ZeroDivisionError):
                raise DomainError("overflow or zero division", node) from None

        return ev_pow
    if isinstance(e, Call):
        fa = compile_expr(e.arg, base_point)
        node = e
        if e.fn == "exp":
            def ev_exp(env):
                try:
                    return math.exp(fa(env))
                except OverflowError:
                    raise DomainError("overflow", node) from None
            return ev_exp
        if e.fn == "ln":
            def ev_ln(env):
                a = fa(env)
                if a <= 0.0:
                    raise DomainError("ln of a non-positive value", node)
                return math.log(a)
            return ev_ln
        fn = {"sin": math.sin, "cos": math.cos, "arctan": math.atan}[e.fn]
        return lambda env: fn(fa(env))
    if isinstance(e, Integral):
        node = e
        return lambda env: _eval_integral(node, env, base_point)
    raise TypeError("cannot compile %r" % (e,))
