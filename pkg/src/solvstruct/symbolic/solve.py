"""Best-effort symbolic solving of eq == 0 for one symbol.

Handles expressions polynomial of degree <= 2 in the target (after clearing
a rational structure), plus isolation of a single target-bearing term through
invertible wrappers (products, powers, exp, ln, arctan) and combination of
integer-coefficient logarithms.  Returns a list of candidate branches; the
caller is expected to verify them.
"""
from __future__ import annotations

from fractions import Fraction

from .expr import (
    Add, Call, Const, Expr, Mul, Pow, Sym,
    ZERO, ONE, MINUS_ONE, HALF,
    add, call, const, div, mul, neg, power, _as_coeff_rest,
)
from .ratnorm import as_num_den, is_zero_poly, poly_coeffs_in, ratnorm

_MAX_DEPTH = 10


def sqrt_branches(e: Expr) -> Expr:
    """Square root of e with even-power factors pulled out.

    Intended for +/- branch pairs, where dropping absolute values does not
    change the solution set."""
    e = ratnorm(e)
    factors = e.factors if isinstance(e, Mul) else (e,)
    outside = []
    inside = []
    for f in factors:
        if isinstance(f, Pow) and isinstance(f.exp, Const) and f.exp.value.denominator == 1:
            k = f.exp.value.numerator
            if k % 2 == 0:
                outside.append(power(f.base, const(k // 2)))
                continue
            if abs(k) > 1:
                outside.append(power(f.base, const((k - (1 if k > 0 else -1)) // 2)))
                inside.append(power(f.base, const(1 if k > 0 else -1)))
                continue
        inside.append(f)
    inner = mul(*inside) if inside else ONE
    return mul(*outside, power(inner, HALF))


def solve_for(eq: Expr, v: str, _depth: int = 0) -> list:
    """Solve eq == 0 for the symbol v; returns candidate solution branches."""
    if _depth > _MAX_DEPTH or v not in eq.free_symbols:
        return []
    num, _den = as_num_den(eq)
    sols = _solve_poly(num, v)
    if sols is not None:
        return sols
    return _solve_isolate(eq, v, _depth)


def _solve_poly(num: Expr, v: str):
    coeffs = poly_coeffs_in(num, v)
    if coeffs is None:
        return None
    coeffs = [ratnorm(c) for c in coeffs]
    while coeffs and is_zero_poly(coeffs[-1]):
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg < 1:
        return []
    if deg == 1:
        return [ratnorm(neg(div(coeffs[0], coeffs[1])))]
    if deg == 2:
        c0, c1, c2 = coeffs
        if is_zero_poly(c1):
            r = sqrt_branches(ratnorm(neg(div(c0, c2))))
            return [r, neg(r)]
        disc = ratnorm(add(mul(c1, c1), neg(mul(const(4), c2, c0))))
        root = sqrt_branches(disc)
        twoa = mul(const(2), c2)
        return [
            ratnorm(div(add(neg(c1), root), twoa)),
            ratnorm(div(add(neg(c1), neg(root)), twoa)),
        ]
    return []


def _split_var_terms(eq: Expr, v: str):
    terms = eq.terms if isinstance(eq, Add) else (eq,)
    with_v = [t for t in terms if v in t.free_symbols]
    without = [t for t in terms if v not in t.free_symbols]
    return with_v, add(*without) if without else ZERO


def _solve_isolate(eq: Expr, v: str, depth: int) -> list:
    with_v, rest = _split_var_terms(eq, v)
    if not with_v:
        return []
    if len(with_v) > 1:
        combined = _combine_logs(with_v, v)
        if combined is None:
            return []
        return solve_for(add(combined, rest), v, depth + 1)
    return _invert(with_v[0], neg(rest), v, depth)


def _combine_logs(terms, v: str):
    """Rewrite sum(c_i * ln(A_i)) with integer c_i as ln(prod A_i^c_i)."""
    exps = []
    for t in terms:
        c, r = _as_coeff_rest(t)
        if not (isinstance(r, Call) and r.fn == "ln" and c.denominator == 1):
            return None
        exps.append(power(r.arg, const(c)))
    return call("ln", mul(*exps))


def _invert(t: Expr, rhs: Expr, v: str, depth: int) -> list:
    """Solve t == rhs where t is a single term containing v."""
    if depth > _MAX_DEPTH:
        return []
    if isinstance(t, Sym):
        return [ratnorm(rhs)] if t.name == v else []
    if isinstance(t, Mul):
        free = [f for f in t.factors if v not in f.free_symbols]
        bound = [f for f in t.factors if v in f.free_symbols]
        if len(bound) != 1:
            # try the polynomial route on the residual equation
            return _residual_poly(t, rhs, v)
        new_rhs = div(rhs, mul(*free)) if free else rhs
        return _invert(bound[0], new_rhs, v, depth + 1)
    if isinstance(t, Pow):
        b, e = t.base, t.exp
        if v in e.free_symbols:
            if isinstance(b, Const) or v not in b.free_symbols:
                # b^g = rhs  ->  g ln(b) = ln(rhs)
                return solve_for(
                    add(mul(e, call("ln", b)), neg(call("ln", rhs))), v, depth + 1)
            return []
        if isinstance(e, Const):
            p, q = e.value.numerator, e.value.denominator
            # b^(p/q) = rhs  ->  b = rhs^(q/p), two branches when p is even
            new_rhs = power(rhs, const(Fraction(q, p)))
            branches = [new_rhs]
            if p % 2 == 0:
                branches.append(neg(new_rhs))
            out = []
            for nb in branches:
                out.extend(_solve_sub(b, nb, v, depth))
            return out
        return []
    if isinstance(t, Call):
        if t.fn == "exp":
            return _solve_sub(t.arg, call("ln", rhs), v, depth)
        if t.fn == "ln":
            return _solve_sub(t.arg, call("exp", rhs), v, depth)
        if t.fn == "arctan":
            tanr = div(call("sin", rhs), call("cos", rhs))
            return _solve_sub(t.arg, tanr, v, depth)
        return []
    if isinstance(t, Add):
        return solve_for(add(t, neg(rhs)), v, depth + 1)
    return _residual_poly(t, rhs, v)


def _solve_sub(lhs: Expr, rhs: Expr, v: str, depth: int) -> list:
    return solve_for(add(lhs, neg(rhs)), v, depth + 1)


def _residual_poly(t: Expr, rhs: Expr, v: str) -> list:
    num, _den = as_num_den(add(t, neg(rhs)))
    sols = _solve_poly(num, v)
    return sols or []
