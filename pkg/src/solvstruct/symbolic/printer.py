"""Serialization of expressions back to the input grammar."""
from __future__ import annotations

from fractions import Fraction

from .expr import Add, Call, Const, Expr, Integral, Mul, Pow, Sym, HALF, _as_coeff_rest

# precedence levels: add 1, mul 2, unary 3, pow 4, atom 5
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _frac(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return "%d/%d" % (v.numerator, v.denominator)


def _paren(s: str, prec: int, ctx: int) -> str:
    return "(" + s + ")" if prec < ctx else s


def _render(e: Expr):
    """Return (string, precedence)."""
    if isinstance(e, Const):
        if e.value < 0:
            return "-" + _frac(-e.value), _UNARY
        if e.value.denominator != 1:
            return _frac(e.value), _MUL
        return _frac(e.value), _ATOM
    if isinstance(e, Sym):
        return e.name, _ATOM
    if isinstance(e, Call):
        s, _ = _render(e.arg)
        return "%s(%s)" % (e.fn, s), _ATOM
    if isinstance(e, Integral):
        s, _ = _render(e.integrand)
        return "intg(%s, %s)" % (s, e.var), _ATOM
    if isinstance(e, Pow):
        if isinstance(e.exp, Const) and e.exp.value == Fraction(1, 2):
            s, _ = _render(e.base)
            return "sqrt(%s)" % s, _ATOM
        bs, bp = _render(e.base)
        es, ep = _render(e.exp)
        bs = _paren(bs, bp, _POW + 1)  # power is right associative; base binds tight
        if not (isinstance(e.exp, (Sym,)) or
                (isinstance(e.exp, Const) and e.exp.value.denominator == 1 and e.exp.value >= 0)):
            es = "(" + es + ")"
        return "%s^%s" % (bs, es), _POW
    if isinstance(e, Mul):
        coeff, rest = _as_coeff_rest(e)
        num_parts, den_parts = [], []
        factors = rest.factors if isinstance(rest, Mul) else (rest,) if rest is not None else ()
        for f in factors:
            if isinstance(f, Pow) and isinstance(f.exp, Const) and f.exp.value < 0:
                inv = Pow(f.base, Const(-f.exp.value)) if f.exp.value != -1 else f.base
                s, p = _render(inv)
                den_parts.append(_paren(s, p, _MUL + 1))
            else:
                s, p = _render(f)
                num_parts.append(_paren(s, p, _MUL))
        sign = ""
        c = coeff
        if c < 0:
            sign = "-"
            c = -c
        if c.numerator != 1 or not num_parts:
            num_parts.insert(0, str(c.numerator))
        if c.denominator != 1:
            den_parts.insert(0, str(c.denominator))
        s = "*".join(num_parts)
        for d in den_parts:
            s += "/" + d
        prec = _UNARY if sign else _MUL
        return sign + s, prec
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            c, _r = _as_coeff_rest(t)
            if c < 0:
                s, p = _render(_scale_neg(t))
                s = _paren(s, p, _MUL)
                parts.append(("- " if i else "-") + s)
            else:
                s, p = _render(t)
                s = _paren(s, p, _MUL)
                parts.append(("+ " + s) if i else s)
        return " ".join(parts), _ADD
    raise TypeError("cannot render %r" % (e,))


def _scale_neg(t: Expr) -> Expr:
    from .expr import neg

    return neg(t)


def to_str(e: Expr) -> str:
    s, _ = _render(e)
    return s
