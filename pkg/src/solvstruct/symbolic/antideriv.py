"""Closed-form antiderivatives for a bounded expression fragment.

Covered: polynomials; rational functions whose structural denominator
factors are linear or quadratic in the integration variable (partial
fractions, giving ln and arctan pieces); products of a polynomial with a
table factor (exp / sin / cos / cos^-2 of an inner function with constant
derivative, by parts); ln/arctan cofactors (by parts the other way); and
u-substitution for inner functions that are rational in the variable or
occur as literal call subtrees.  Anything else comes back wrapped in an
unevaluated integral node, never as an error.
"""
from __future__ import annotations

from fractions import Fraction

from .expr import (
    Add, Call, Const, Expr, Integral, Mul, Pow, Sym,
    ZERO, ONE, MINUS_ONE, HALF,
    add, call, const, contains_integral, diff, div, integral, mul, neg, power,
    replace_subtree, substitute, subexpressions, sym, ExprError,
)
from .ratnorm import fraction_parts, is_zero_poly, poly_coeffs_in, ratnorm

_MAX_DEPTH = 8
_SUBST_SYM = "tsubst"


def antiderivative(e: Expr, v: str, _depth: int = 0) -> Expr:
    """Return F with dF/dv == e; unevaluated pieces stay as intg nodes."""
    queue = [(t, True) for t in (e.terms if isinstance(e, Add) else (e,))]
    done = []
    failed = []
    while queue:
        t, may_split = queue.pop()
        r = _integrate_term(t, v, _depth)
        if r is not None:
            done.append(r)
            continue
        if may_split and v in t.free_symbols and not contains_integral(t, v):
            # retry with the numerator sum split over the common denominator
            num, factors = fraction_parts(t)
            if isinstance(num, Add):
                den_part = mul(*[power(f, const(-m)) for f, m in factors])
                queue.extend((mul(nt, den_part), False) for nt in num.terms)
                continue
        failed.append(t)
    if failed:
        done.append(_wrap_unevaluated(add(*failed), v, _depth))
    return add(*done)


def _wrap_unevaluated(rest: Expr, v: str, depth: int) -> Expr:
    """Wrap `rest` in integral nodes without nesting same-variable integrals."""
    terms = rest.terms if isinstance(rest, Add) else (rest,)
    plain = []
    out = []
    for t in terms:
        if contains_integral(t, v):
            out.append(_integral_node_by_parts(t, v, depth))
        else:
            plain.append(t)
    if plain:
        out.append(Integral(ratnorm(add(*plain)), v))
    return add(*out)


def _integral_node_by_parts(t: Expr, v: str, depth: int) -> Expr:
    """Integrate a term containing a same-variable integral node by parts."""
    factors = t.factors if isinstance(t, Mul) else (t,)
    node = None
    cof = []
    for f in factors:
        if node is None and isinstance(f, Integral) and f.var == v:
            node = f
        else:
            cof.append(f)
    if node is None or any(contains_integral(f, v) for f in cof):
        raise ExprError("cannot integrate nested integral term %r" % (t,))
    a = mul(*cof) if cof else ONE
    big_a = antiderivative(a, v, depth + 1)
    if contains_integral(big_a, v):
        raise ExprError("cofactor of an integral node is not integrable: %r" % (a,))
    rest = antiderivative(ratnorm(mul(big_a, node.integrand)), v, depth + 1)
    return add(mul(big_a, node), neg(rest))


# ---------------------------------------------------------------------------
# single-term strategies
# ---------------------------------------------------------------------------

def _integrate_term(t: Expr, v: str, depth: int):
    if depth > _MAX_DEPTH:
        return None
    if v not in t.free_symbols:
        return mul(t, sym(v))
    if contains_integral(t, v):
        return None
    r = _integrate_rational(t, v)
    if r is not None:
        return r
    r = _integrate_by_parts(t, v, depth)
    if r is not None:
        return r
    r = _integrate_by_substitution(t, v, depth)
    if r is not None:
        return r
    return None


# -- rational functions ------------------------------------------------------

def _upoly_trim(p):
    while p and is_zero_poly(p[-1]):
        p.pop()
    return p


def _upoly_mul(a, b):
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == ZERO:
            continue
        for j, cb in enumerate(b):
            if cb == ZERO:
                continue
            out[i + j] = add(out[i + j], mul(ca, cb))
    return [ratnorm(c) for c in out]


def _upoly_divmod(num, den):
    num = [ratnorm(c) for c in num]
    den = _upoly_trim([ratnorm(c) for c in den])
    if not den:
        raise ZeroDivisionError
    lead = den[-1]
    inv_lead = power(lead, MINUS_ONE)
    q = [ZERO] * max(1, len(num) - len(den) + 1)
    r = list(num)
    while len(_upoly_trim(r)) >= len(den):
        d = len(r) - len(den)
        c = ratnorm(mul(r[-1], inv_lead))
        q[d] = c
        for i, dc in enumerate(den):
            r[d + i] = ratnorm(add(r[d + i], neg(mul(c, dc))))
        r.pop()
    return q, r


def _poly_expr(coeffs, v: str) -> Expr:
    x = sym(v)
    return add(*[mul(c, power(x, const(d))) for d, c in enumerate(coeffs)])


def _poly_primitive(coeffs, v: str) -> Expr:
    x = sym(v)
    return add(*[
        mul(c, const(Fraction(1, d + 1)), power(x, const(d + 1)))
        for d, c in enumerate(coeffs)
    ])


def _solve_linear_system(rows, rhs):
    """Gauss-Jordan over symbolic entries; underdetermined unknowns become 0."""
    n_un = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    rank = 0
    for c in range(n_un):
        piv = None
        for i in range(rank, len(aug)):
            if not is_zero_poly(aug[i][c]):
                piv = i
                break
        if piv is None:
            continue
        aug[rank], aug[piv] = aug[piv], aug[rank]
        inv = power(aug[rank][c], MINUS_ONE)
        aug[rank] = [ratnorm(mul(x, inv)) for x in aug[rank]]
        for i in range(len(aug)):
            if i != rank and not is_zero_poly(aug[i][c]):
                f = aug[i][c]
                aug[i] = [ratnorm(add(x, neg(mul(f, y)))) for x, y in zip(aug[i], aug[rank])]
        pivots.append(c)
        rank += 1
    for i in range(rank, len(aug)):
        if not is_zero_poly(aug[i][-1]):
            return None
    sol = [ZERO] * n_un
    for i, c in enumerate(pivots):
        sol[c] = aug[i][-1]
    return sol


def _integrate_rational(t: Expr, v: str):
    num_expr, factors = fraction_parts(t)
    num_coeffs = poly_coeffs_in(num_expr, v)
    if num_coeffs is None:
        return None
    mult_parts = []
    vfactors = []
    for f, m in factors:
        if v not in f.free_symbols:
            mult_parts.append(power(f, const(-m)))
            continue
        fc = poly_coeffs_in(f, v)
        if fc is None:
            return None
        fc = _upoly_trim([ratnorm(c) for c in fc])
        if len(fc) - 1 > 2:
            return None
        vfactors.append((fc, m, f))
    mult = mul(*mult_parts) if mult_parts else ONE
    num_coeffs = [ratnorm(mul(c, mult)) for c in num_coeffs]
    if not vfactors:
        return _poly_primitive(num_coeffs, v)

    den = [ONE]
    for fc, m, _f in vfactors:
        for _ in range(m):
            den = _upoly_mul(den, fc)
    quot, rem = _upoly_divmod(num_coeffs, den)
    pieces = [_poly_primitive(quot, v)] if _upoly_trim(list(quot)) else []

    # undetermined coefficients for the proper part rem/den
    unknown_cols = []   # (factor index, power j, numerator degree s)
    for i, (fc, m, _f) in enumerate(vfactors):
        deg = len(fc) - 1
        for j in range(1, m + 1):
            for s in range(deg):
                unknown_cols.append((i, j, s))
    n_rows = len(den) - 1
    rows = [[ZERO] * len(unknown_cols) for _ in range(n_rows)]
    for col, (i, j, s) in enumerate(unknown_cols):
        cof = [ONE]
        for i2, (fc2, m2, _f2) in enumerate(vfactors):
            p = m2 - j if i2 == i else m2
            for _ in range(p):
                cof = _upoly_mul(cof, fc2)
        shifted = [ZERO] * s + cof
        for d, c in enumerate(shifted):
            if d < n_rows:
                rows[d][col] = c
    rhs = [rem[d] if d < len(rem) else ZERO for d in range(n_rows)]
    sol = _solve_linear_system(rows, rhs)
    if sol is None:
        return None
    for col, (i, j, s) in enumerate(unknown_cols):
        if sol[col] == ZERO:
            continue
        fc = vfactors[i][0]
        piece = _integrate_pf_piece(sol[col], s, fc, j, v)
        if piece is None:
            return None
        pieces.append(piece)
    return add(*pieces)


def _integrate_pf_piece(coef: Expr, s: int, fc, j: int, v: str):
    """Integrate coef * v^s / f(v)^j for deg(f) <= 2 and s < deg(f)."""
    x = sym(v)
    f_expr = _poly_expr(fc, v)
    if len(fc) == 2:
        a, b = fc[0], fc[1]  # f = a + b v
        if j == 1:
            return mul(coef, power(b, MINUS_ONE), call("ln", f_expr))
        return mul(coef, power(b, MINUS_ONE),
                   const(Fraction(1, 1 - j)), power(f_expr, const(1 - j)))
    c0, c1, c2 = fc[0], fc[1], fc[2]  # f = c0 + c1 v + c2 v^2
    disc = ratnorm(add(mul(const(4), c2, c0), neg(mul(c1, c1))))  # 4ac - b^2
    if is_zero_poly(disc):
        # f = c2 (v + c1/(2 c2))^2: reduce to a repeated linear factor
        half_shift = ratnorm(mul(c1, HALF, power(c2, MINUS_ONE)))
        shift = add(x, half_shift)
        base = mul(coef, power(c2, const(-j)))
        k = 2 * j
        if s == 1:
            # v/shift^k = 1/shift^(k-1) - half_shift/shift^k
            t1 = (mul(base, call("ln", shift)) if k == 2
                  else mul(base, const(Fraction(1, 2 - k)), power(shift, const(2 - k))))
            t2 = mul(base, half_shift, const(Fraction(1, 1 - k)), power(shift, const(1 - k)))
            return add(t1, neg(t2))
        return mul(base, const(Fraction(1, 1 - k)), power(shift, const(1 - k)))
    # decompose coef*(v^s) = alpha*(2 c2 v + c1) + beta
    if s == 1:
        alpha = ratnorm(mul(coef, HALF, power(c2, MINUS_ONE)))
        beta = ratnorm(neg(mul(coef, c1, HALF, power(c2, MINUS_ONE))))
    else:
        alpha = ZERO
        beta = coef
    pieces = []
    if not is_zero_poly(alpha):
        if j == 1:
            pieces.append(mul(alpha, call("ln", f_expr)))
        else:
            pieces.append(mul(alpha, const(Fraction(1, 1 - j)), power(f_expr, const(1 - j))))
    if not is_zero_poly(beta):
        pieces.append(mul(beta, _quad_reciprocal_primitive(fc, j, v, disc)))
    return add(*pieces)


def _quad_reciprocal_primitive(fc, j: int, v: str, disc: Expr) -> Expr:
    """Antiderivative of 1/f^j for an irreducible quadratic f."""
    x = sym(v)
    c0, c1, c2 = fc
    f_expr = _poly_expr(fc, v)
    lin = add(mul(const(2), c2, x), c1)  # 2av + b
    if j == 1:
        root = power(disc, HALF)
        return mul(const(2), power(root, MINUS_ONE),
                   call("arctan", div(lin, root)))
    prev = _quad_reciprocal_primitive(fc, j - 1, v, disc)
    inv = power(mul(const(j - 1), disc), MINUS_ONE)
    return add(
        mul(lin, inv, power(f_expr, const(1 - j))),
        mul(const(2 * (2 * j - 3)), c2, inv, prev),
    )


# -- by parts ----------------------------------------------------------------

def _split_poly_special(t: Expr, v: str):
    """Split a term into (v-free multiplier, poly-in-v expr, special factors)."""
    factors = t.factors if isinstance(t, Mul) else (t,)
    mult = []
    poly = []
    special = []
    for f in factors:
        if v not in f.free_symbols:
            mult.append(f)
        elif poly_coeffs_in(f, v) is not None:
            poly.append(f)
        else:
            special.append(f)
    return (mul(*mult) if mult else ONE,
            mul(*poly) if poly else ONE,
            special)


def _table_primitive(s: Expr, v: str):
    """Single-step antiderivative of a lone special factor, if tabulated."""
    if isinstance(s, Call):
        h = s.arg
        dh = diff(h, v)
        if v in dh.free_symbols:
            return None
        if dh == ZERO:
            return None
        inv = power(dh, MINUS_ONE)
        if s.fn == "exp":
            return mul(s, inv)
        if s.fn == "sin":
            return mul(MINUS_ONE, call("cos", h), inv)
        if s.fn == "cos":
            return mul(call("sin", h), inv)
        if s.fn == "ln":
            return mul(inv, add(mul(h, s), neg(h)))
        if s.fn == "arctan":
            inner = add(ONE, power(h, const(2)))
            return mul(inv, add(mul(h, s), neg(mul(HALF, call("ln", inner)))))
        return None
    if isinstance(s, Pow):
        b, e = s.base, s.exp
        if isinstance(b, Call) and b.fn == "cos" and e == const(-2):
            dh = diff(b.arg, v)
            if v in dh.free_symbols or dh == ZERO:
                return None
            return mul(power(dh, MINUS_ONE), call("sin", b.arg),
                       power(call("cos", b.arg), MINUS_ONE))
        if isinstance(e, Const) and e.value != -1:
            bc = poly_coeffs_in(b, v)
            if bc is not None and len(_upoly_trim([ratnorm(c) for c in bc])) == 2:
                dh = ratnorm(bc[1])
                if v not in dh.free_symbols:
                    k = e.value + 1
                    return mul(power(dh, MINUS_ONE), const(1 / k), power(b, const(k)))
        return None
    return None


def _integrate_by_parts(t: Expr, v: str, depth: int):
    mult, poly, special = _split_poly_special(t, v)
    if len(special) != 1:
        return None
    s = special[0]
    coeffs = poly_coeffs_in(poly, v)
    if coeffs is None:
        return None
    coeffs = _upoly_trim([ratnorm(c) for c in coeffs])
    if isinstance(s, Call) and s.fn in ("ln", "arctan") and len(coeffs) > 1:
        # differentiate the call, integrate the polynomial
        q = _poly_primitive(coeffs, v)
        rest = _integrate_term_or_none(ratnorm(mul(q, diff(s, v))), v, depth + 1)
        if rest is None:
            return None
        return mul(mult, add(mul(q, s), neg(rest)))
    prim = _table_primitive(s, v)
    if prim is not None:
        if len(coeffs) <= 1:
            # constant cofactor
            c = coeffs[0] if coeffs else ZERO
            return mul(mult, c, prim)
        p_expr = _poly_expr(coeffs, v)
        rest = _integrate_term_or_none(ratnorm(mul(diff(p_expr, v), prim)), v, depth + 1)
        if rest is None:
            return None
        return mul(mult, add(mul(p_expr, prim), neg(rest)))
    return None


def _integrate_term_or_none(e: Expr, v: str, depth: int):
    if depth > _MAX_DEPTH:
        return None
    terms = e.terms if isinstance(e, Add) else (e,)
    out = []
    for t in terms:
        r = _integrate_term(t, v, depth)
        if r is None:
            return None
        out.append(r)
    return add(*out)


# -- substitution ------------------------------------------------------------

def _substitution_candidates(t: Expr, v: str):
    seen = set()
    cands = []
    for s in subexpressions(t):
        if s in seen:
            continue
        seen.add(s)
        if v not in s.free_symbols:
            continue
        if isinstance(s, Sym):
            continue
        if isinstance(s, Call):
            cands.append(s)
            if not isinstance(s.arg, Sym):
                cands.append(s.arg)
        elif isinstance(s, Pow):
            if not isinstance(s.base, Sym):
                cands.append(s.base)
            elif not (isinstance(s.exp, Const) and s.exp.value.denominator == 1 and s.exp.value > 0):
                cands.append(s)
    uniq = []
    seen2 = set()
    for c in cands:
        if c not in seen2:
            seen2.add(c)
            uniq.append(c)
    uniq.sort(key=Expr.sort_key)
    return uniq[:12]


def _integrate_by_substitution(t: Expr, v: str, depth: int):
    from .solve import solve_for

    tvar = sym(_SUBST_SYM)
    for h in _substitution_candidates(t, v):
        dh = diff(h, v)
        if dh == ZERO:
            continue
        q = ratnorm(div(t, dh))
        # mechanism 1: the candidate occurs as a literal subtree
        repl = ratnorm(replace_subtree(q, h, tvar))
        if v not in repl.free_symbols and _SUBST_SYM in repl.free_symbols:
            back = ratnorm(add(replace_subtree(repl, tvar, h), neg(q)))
            if is_zero_poly(back):
                g = _integrate_term_or_none(repl, _SUBST_SYM, depth + 1)
                if g is not None and not contains_integral(g, _SUBST_SYM):
                    return substitute(g, {_SUBST_SYM: h})
        # mechanism 2: invert h(v) = t rationally
        for vin in solve_for(add(h, neg(tvar)), v):
            if _SUBST_SYM not in vin.free_symbols:
                continue
            try:
                qt = ratnorm(substitute(q, {v: vin}))
            except (ExprError, ZeroDivisionError):
                continue
            if v in qt.free_symbols:
                continue
            try:
                check = ratnorm(add(substitute(qt, {_SUBST_SYM: h}), neg(q)))
            except (ExprError, ZeroDivisionError):
                continue
            if not is_zero_poly(check):
                continue
            g = _integrate_term_or_none(qt, _SUBST_SYM, depth + 1)
            if g is not None and not contains_integral(g, _SUBST_SYM):
                return substitute(g, {_SUBST_SYM: h})
    return None
