"""Rational normal form.

Expressions are flattened into (numerator polynomial, factored denominator)
pairs.  Polynomials live over the rationals in "atoms": symbols, calls,
unevaluated integrals and non-integer powers, treated as independent
indeterminates, except that exp atoms merge multiplicatively and even powers
of sin reduce through sin^2 = 1 - cos^2.  Cancellation removes denominator
factors that divide the numerator exactly.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

from .expr import (
    Add, Call, Const, Expr, Integral, Mul, Pow, Sym,
    ZERO, ONE, MINUS_ONE, add, call, const, mul, power, sum_sign,
)

# A polynomial is a dict: monomial -> Fraction.
# A monomial is a tuple of (atom, int>0) pairs sorted by the atom sort key.

_EMPTY_MONO = ()


def _poly_const(c: Fraction) -> dict:
    if c == 0:
        return {}
    return {_EMPTY_MONO: c}


_P_ONE = {_EMPTY_MONO: Fraction(1)}


def _poly_add(p: dict, q: dict) -> dict:
    if not p:
        return q
    if not q:
        return p
    r = dict(p)
    for m, c in q.items():
        nc = r.get(m, Fraction(0)) + c
        if nc:
            r[m] = nc
        else:
            r.pop(m, None)
    return r


def _poly_scale(p: dict, c: Fraction) -> dict:
    if c == 0 or not p:
        return {}
    if c == 1:
        return p
    return {m: v * c for m, v in p.items()}


def _mono_normalized(m) -> bool:
    """True when a merged monomial needs no further rewriting.

    exp atoms are units: they carry a positively-oriented argument and an
    exponent of +-1; anything else re-normalizes."""
    exp_seen = False
    for a, k in m:
        if isinstance(a, Call):
            if a.fn == "exp":
                if exp_seen:
                    return False
                exp_seen = True
            elif a.fn == "sin" and k >= 2:
                return False
        elif isinstance(a, Pow) and k != 1:
            return False
    return True


def _normalize_pairs(pairs) -> dict:
    """Collect (atom, exp) pairs into a normalized polynomial."""
    amap: dict = {}
    exp_terms = []
    for a, k in pairs:
        if k == 0:
            continue
        if isinstance(a, Call) and a.fn == "exp":
            exp_terms.append(mul(const(k), a.arg))
            continue
        amap[a] = amap.get(a, 0) + k
    out_poly = _P_ONE
    plain = []
    for a, k in amap.items():
        if k == 0:
            continue
        if k < 0:
            raise ValueError("negative power in numerator monomial")
        if isinstance(a, Call) and a.fn == "sin" and k >= 2:
            # sin^k -> (1 - cos^2)^(k//2) * sin^(k%2)
            cosa = call("cos", a.arg)
            base = _poly_add(_P_ONE, {_mk_mono([(cosa, 2)]): Fraction(-1)})
            out_poly = _poly_mul(out_poly, _poly_pow(base, k // 2))
            if k % 2:
                plain.append((a, 1))
            continue
        if k != 1 and not isinstance(a, Sym):
            p = power(a, const(k))
            if not (isinstance(p, Pow) and p.base == a and p.exp == const(k)):
                np_, nd = _pfe(p)
                if nd:
                    raise ValueError("atom power produced a denominator")
                out_poly = _poly_mul(out_poly, np_)
                continue
        plain.append((a, k))
    if exp_terms:
        arg = add(*exp_terms)
        if arg != ZERO:
            s, na = sum_sign(arg)
            ea = call("exp", na)
            if isinstance(ea, Const):
                if s < 0 and ea.value != 0:
                    ea = const(Fraction(1) / ea.value)
                out_poly = _poly_scale(out_poly, ea.value)
            elif isinstance(ea, Call) and ea.fn == "exp":
                atom, k = _exp_atom(arg)
                plain.append((atom, k))
            elif s > 0:
                np_, nd = _pfe(ea)
                if nd:
                    raise ValueError("exp merge produced a denominator")
                out_poly = _poly_mul(out_poly, np_)
            else:
                # folding of exp(-arg) left the exponential world; keep the
                # unoriented atom rather than introduce a denominator here
                plain.append((Call("exp", arg), 1))
    if plain:
        mono = _mk_mono(plain)
        if out_poly is _P_ONE:
            out_poly = {mono: Fraction(1)}
        else:
            r: dict = {}
            for m, c in out_poly.items():
                mm = _mono_mul_simple(m, mono)
                if _mono_normalized(mm):
                    nc = r.get(mm, Fraction(0)) + c
                    if nc:
                        r[mm] = nc
                    else:
                        r.pop(mm, None)
                else:
                    r = _poly_add(r, _poly_scale(_normalize_pairs(list(mm)), c))
            out_poly = r
    return out_poly


def _mk_mono(pairs) -> tuple:
    return tuple(sorted(pairs, key=lambda ak: ak[0].sort_key()))


def _mono_mul_simple(m1: tuple, m2: tuple) -> tuple:
    amap: dict = {}
    order = []
    for a, k in m1 + m2:
        if a in amap:
            amap[a] += k
        else:
            amap[a] = k
            order.append(a)
    return _mk_mono([(a, amap[a]) for a in order if amap[a]])


def _poly_mul(p: dict, q: dict) -> dict:
    if not p or not q:
        return {}
    r: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            c = c1 * c2
            m = _mono_mul_simple(m1, m2)
            if _mono_normalized(m):
                nc = r.get(m, Fraction(0)) + c
                if nc:
                    r[m] = nc
                else:
                    r.pop(m, None)
            else:
                sub = _poly_scale(_normalize_pairs(list(m)), c)
                r = _poly_add(r, sub)
    return r


def _poly_pow(p: dict, k: int) -> dict:
    if k == 0:
        return dict(_P_ONE)
    r = p
    for _ in range(k - 1):
        r = _poly_mul(r, p)
    return r


# ---------------------------------------------------------------------------
# denominator factor bookkeeping: dict factorExpr -> multiplicity
# ---------------------------------------------------------------------------

def _den_mul(d1: dict, d2: dict) -> dict:
    if not d1:
        return dict(d2)
    r = dict(d1)
    for f, m in d2.items():
        r[f] = r.get(f, 0) + m
    return r


def _den_pow(d: dict, k: int) -> dict:
    return {f: m * k for f, m in d.items()}


def _is_unit_atom(a) -> bool:
    return isinstance(a, Call) and a.fn == "exp"


def _content(e: Expr) -> Fraction:
    """Positive rational content of an expression's coefficients."""
    if isinstance(e, Const):
        return abs(e.value)
    if isinstance(e, Add):
        num_g = 0
        den_l = 1
        for t in e.terms:
            c = _content_term(t)
            num_g = gcd(num_g, c.numerator)
            den_l = den_l * c.denominator // gcd(den_l, c.denominator)
        return Fraction(num_g, den_l) if num_g else Fraction(1)
    return _content_term(e)


def _content_term(t: Expr) -> Fraction:
    if isinstance(t, Const):
        return abs(t.value)
    if isinstance(t, Mul):
        c = Fraction(1)
        for f in t.factors:
            c *= _content_term(f)
        return c
    if isinstance(t, Add):
        return _content(t)
    if isinstance(t, Pow) and isinstance(t.exp, Const) and t.exp.value.denominator == 1:
        k = t.exp.value.numerator
        if k > 0:
            return _content_term(t.base) ** k
        return Fraction(1)
    return Fraction(1)


def _exp_atom(arg: Expr):
    """Canonical (atom, exponent) pair for exp(arg): the atom argument is
    positively oriented and primitive (integer content 1), so equal
    exponential content always lands on the same atom."""
    s, na = sum_sign(arg)
    p = _content(na).numerator
    if p > 1:
        na = ratnorm(mul(const(Fraction(1, p)), na))
    return Call("exp", na), (p if s > 0 else -p)


def _poly_to_den_factors(p: dict):
    """Factor a polynomial structurally into (coefficient, unit monomial,
    {factorExpr: mult}): numeric content, an invertible exp part, a common
    monomial, and the remaining polynomial."""
    if not p:
        raise ZeroDivisionError("zero denominator")
    monos = list(p.keys())
    common = {a: k for a, k in monos[0]}
    for m in monos[1:]:
        d = dict(m)
        for a in list(common):
            common[a] = min(common[a], d.get(a, 0))
            if common[a] == 0:
                del common[a]
    num_g = 0
    den_l = 1
    for c in p.values():
        num_g = gcd(num_g, abs(c.numerator))
        den_l = den_l * c.denominator // gcd(den_l, c.denominator)
    content = Fraction(num_g, den_l)
    rest = {}
    for m, c in p.items():
        d = dict(m)
        for a, k in common.items():
            d[a] = d.get(a, 0) - k
        rest[_mk_mono([(a, k) for a, k in d.items() if k])] = c / content
    unit = {a: k for a, k in common.items() if _is_unit_atom(a)}
    factors = {a: k for a, k in common.items() if not _is_unit_atom(a)}
    if len(rest) == 1 and _EMPTY_MONO in rest:
        content *= rest[_EMPTY_MONO]
    else:
        rest = _split_ln_arg_factors(rest, factors)
        rest_expr = poly_to_expr(rest)
        s, rest_expr = sum_sign(rest_expr)
        if s < 0:
            content = -content
        if rest_expr != ONE:
            factors[rest_expr] = factors.get(rest_expr, 0) + 1
    return content, unit, factors


def _split_ln_arg_factors(rest: dict, factors: dict) -> dict:
    """Divide out polynomial factors that coincide with arguments of ln
    atoms appearing in the polynomial (they usually ride along as factors)."""
    changed = True
    guard = 0
    while changed and guard < 8:
        changed = False
        guard += 1
        args = []
        for m in rest:
            for a, _k in m:
                if isinstance(a, Call) and a.fn == "ln":
                    args.append(a.arg)
        for arg in args:
            try:
                ap, ad = _pfe(arg)
            except (ValueError, ZeroDivisionError):
                continue
            if ad or len(ap) < 2:
                continue
            q = _poly_divexact(rest, ap)
            if q is not None and len(q) < len(rest) + len(ap):
                s, fexpr = sum_sign(poly_to_expr(ap))
                rest = q if s > 0 else {m: -c for m, c in q.items()}
                factors[fexpr] = factors.get(fexpr, 0) + 1
                changed = True
                break
    return rest


def _den_factor_poly(f: Expr, m: int) -> dict:
    np_, nd = _pfe(f)
    if nd:
        raise ValueError("denominator factor with nested denominator")
    return _poly_pow(np_, m)


# ---------------------------------------------------------------------------
# expression -> (num poly, den factors)
# ---------------------------------------------------------------------------

_pfe_cache: dict = {}


def _pfe(e: Expr):
    r = _pfe_cache.get(e)
    if r is not None:
        return r
    if isinstance(e, Const):
        r = (_poly_const(e.value), {})
    elif isinstance(e, Sym):
        r = ({((e, 1),): Fraction(1)}, {})
    elif isinstance(e, Add):
        parts = [_pfe(t) for t in e.terms]
        den: dict = {}
        for _, d in parts:
            for f, m in d.items():
                if den.get(f, 0) < m:
                    den[f] = m
        num: dict = {}
        for np_, nd in parts:
            extra = _P_ONE
            for f, m in den.items():
                lack = m - nd.get(f, 0)
                if lack:
                    extra = _poly_mul(extra, _den_factor_poly(f, lack))
            num = _poly_add(num, _poly_mul(np_, extra))
        r = (num, den)
    elif isinstance(e, Mul):
        num = _P_ONE
        den: dict = {}
        for f in e.factors:
            np_, nd = _pfe(f)
            num = _poly_mul(num, np_)
            den = _den_mul(den, nd)
        r = (num, den)
    elif isinstance(e, Pow) and isinstance(e.exp, Const) and e.exp.value.denominator == 1:
        k = e.exp.value.numerator
        np_, nd = _pfe(e.base)
        if k > 0:
            r = (_poly_pow(np_, k), _den_pow(nd, k))
        else:
            k = -k
            num = _P_ONE
            for f, m in nd.items():
                num = _poly_mul(num, _den_factor_poly(f, m * k))
            content, unit, factors = _poly_to_den_factors(np_)
            if unit:
                inv_unit = {_mk_mono([(a, -m * k) for a, m in unit.items()]): Fraction(1)}
                num = _poly_mul(num, inv_unit)
            num = _poly_scale(num, Fraction(1) / content ** k)
            r = (num, _den_pow(factors, k))
    elif isinstance(e, Call) and e.fn == "exp":
        atom, k = _exp_atom(e.arg)
        r = ({((atom, k),): Fraction(1)}, {})
    else:
        # opaque atom: call, integral, or non-integer power
        r = ({((e, 1),): Fraction(1)}, {})
    if len(_pfe_cache) > 100000:
        _pfe_cache.clear()
    _pfe_cache[e] = r
    return r


def poly_to_expr(p: dict) -> Expr:
    terms = []
    for m, c in p.items():
        factors = [power(a, const(k)) for a, k in m]
        terms.append(mul(const(c), *factors))
    return add(*terms)


def _den_to_expr_factors(d: dict):
    return [power(f, const(-m)) for f, m in sorted(d.items(), key=lambda fm: fm[0].sort_key())]


# ---------------------------------------------------------------------------
# exact multivariate division
# ---------------------------------------------------------------------------

def _poly_divexact(num: dict, div: dict):
    """Exact division num / div, or None when it does not divide.

    exp atoms are invertible, so their exponents may go negative both in the
    inputs and in the quotient."""
    if not num:
        return {}
    if not div:
        raise ZeroDivisionError
    atoms = []
    seen = set()
    for p in (num, div):
        for m in p:
            for a, _k in m:
                if a not in seen:
                    seen.add(a)
                    atoms.append(a)
    atoms.sort(key=Expr.sort_key)
    index = {a: i for i, a in enumerate(atoms)}
    n = len(atoms)
    unit_cols = {i for i, a in enumerate(atoms) if _is_unit_atom(a)}

    def vec(m):
        v = [0] * n
        for a, k in m:
            v[index[a]] = k
        return tuple(v)

    def unvec(v):
        return _mk_mono([(atoms[i], k) for i, k in enumerate(v) if k])

    def order_key(v):
        return (sum(v), v)

    def shift_nonneg(pv):
        """Shift unit columns so all exponents are >= 0; return the shift."""
        shift = [0] * n
        for i in unit_cols:
            m = min(v[i] for v in pv)
            if m < 0:
                shift[i] = m
        if any(shift):
            pv2 = {tuple(a - s for a, s in zip(v, shift)): c for v, c in pv.items()}
            return pv2, tuple(shift)
        return pv, tuple(shift)

    nv = {vec(m): c for m, c in num.items()}
    dv = {vec(m): c for m, c in div.items()}
    nv, nshift = shift_nonneg(nv)
    dv, dshift = shift_nonneg(dv)
    dlead = max(dv, key=order_key)
    dlc = dv[dlead]
    q: dict = {}
    guard = 0
    while nv:
        guard += 1
        if guard > 10000:
            return None
        nlead = max(nv, key=order_key)
        diffv = tuple(a - b for a, b in zip(nlead, dlead))
        if any(x < 0 for i, x in enumerate(diffv) if i not in unit_cols):
            return None
        qc = nv[nlead] / dlc
        q[diffv] = qc
        for m, c in dv.items():
            t = tuple(a + b for a, b in zip(m, diffv))
            nc = nv.get(t, Fraction(0)) - c * qc
            if nc:
                nv[t] = nc
            else:
                nv.pop(t, None)
    back = tuple(a - b for a, b in zip(nshift, dshift))
    return {unvec(tuple(a + b for a, b in zip(v, back))): c for v, c in q.items()}


# ---------------------------------------------------------------------------
# public interface
# ---------------------------------------------------------------------------

def fraction_parts(e: Expr):
    """Return (numerator poly-expr, [(factor, mult), ...]) after cancellation.

    The denominator factors are canonical, sign-normalized expressions; the
    represented value is num / prod(factor**mult)."""
    num, den = _pfe(e)
    if not num:
        return ZERO, []
    out_factors = []
    for f, m in sorted(den.items(), key=lambda fm: fm[0].sort_key()):
        pf = _den_factor_poly(f, 1)
        while m > 0:
            q = _poly_divexact(num, pf)
            if q is None:
                break
            num = q
            m -= 1
        if m:
            out_factors.append((f, m))
    return poly_to_expr(num), out_factors


def as_num_den(e: Expr):
    num, factors = fraction_parts(e)
    den = mul(*[power(f, const(m)) for f, m in factors]) if factors else ONE
    return num, den


def ratnorm(e: Expr) -> Expr:
    """Rewrite e as cancelled numerator / factored denominator."""
    num, factors = fraction_parts(e)
    if not factors:
        return num
    return mul(num, *[power(f, const(-m)) for f, m in factors])


def is_zero_poly(e: Expr) -> bool:
    """Exact zero test through the rational normal form."""
    num, _den = _pfe(e)
    return not num


def poly_coeffs_in(e: Expr, v: str):
    """Coefficients [c0, c1, ...] of e as a polynomial in the symbol v, or
    None when e is not polynomial in v (after clearing a v-free denominator)."""
    num, den = _pfe(e)
    for f in den:
        if v in f.free_symbols:
            return None
    vs = Sym(v)
    buckets: dict = {}
    for m, c in num.items():
        deg = 0
        rest = []
        for a, k in m:
            if isinstance(a, Sym) and a.name == v:
                deg = k
            elif v in a.free_symbols:
                return None
            else:
                rest.append((a, k))
        b = buckets.setdefault(deg, {})
        mono = _mk_mono(rest)
        b[mono] = b.get(mono, Fraction(0)) + c
    if not buckets:
        return [ZERO]
    den_expr = mul(*[power(f, const(-m)) for f, m in den.items()]) if den else ONE
    top = max(buckets)
    out = []
    for d in range(top + 1):
        p = buckets.get(d)
        out.append(mul(poly_to_expr(p), den_expr) if p else ZERO)
    return out
