"""Immutable symbolic expression trees with light canonicalization.

Node kinds: exact-rational constants, symbols, flattened/sorted sums and
products, powers, calls into a fixed function vocabulary, and unevaluated
integrals.  Canonicalization on construction keeps the rules cheap and
predictable: constants fold, like terms and like powers merge, exp factors
combine, sums inside even/odd contexts get a deterministic sign, and the
trivial identities x^0 -> 1, x^1 -> x, 0*a -> 0, 1*a -> a always apply.
Heavier rational simplification lives in ratnorm.py.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, Fraction]

# functions accepted by call(); tan and sqrt are rewritten on construction
FUNCTIONS = ("exp", "ln", "sin", "cos", "tan", "arctan", "sqrt")

_ODD_FUNCS = ("sin", "arctan")
_EVEN_FUNCS = ("cos",)


class ExprError(ValueError):
    pass


class Expr:
    """Base class for all nodes.  Instances are immutable and hashable."""

    __slots__ = ("_hash", "_key", "_free")

    def __init__(self):
        self._hash = None
        self._key = None
        self._free = None

    # -- structural equality -------------------------------------------------
    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        if hash(self) != hash(other):
            return False
        return self._eq(other)

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        if self._hash is None:
            self._hash = self._compute_hash()
        return self._hash

    # -- arithmetic sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, other):
        return power(self, _coerce(other))

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        from .printer import to_str

        return to_str(self)

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            self._free = self._compute_free()
        return self._free

    def sort_key(self):
        if self._key is None:
            self._key = self._compute_key()
        return self._key


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return const(v)
    raise TypeError("cannot build Expr from %r" % (v,))


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Fraction):
        super().__init__()
        self.value = value

    def _compute_hash(self):
        return hash(("c", self.value))

    def _eq(self, other):
        return isinstance(other, Const) and self.value == other.value

    def _compute_key(self):
        return (0, self.value.numerator, self.value.denominator)

    def _compute_free(self):
        return frozenset()


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        super().__init__()
        self.name = name

    def _compute_hash(self):
        return hash(("s", self.name))

    def _eq(self, other):
        return isinstance(other, Sym) and self.name == other.name

    def _compute_key(self):
        return (1, self.name)

    def _compute_free(self):
        return frozenset((self.name,))


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        super().__init__()
        self.fn = fn
        self.arg = arg

    def _compute_hash(self):
        return hash(("f", self.fn, self.arg))

    def _eq(self, other):
        return isinstance(other, Call) and self.fn == other.fn and self.arg == other.arg

    def _compute_key(self):
        return (2, self.fn, self.arg.sort_key())

    def _compute_free(self):
        return self.arg.free_symbols


class Integral(Expr):
    """Unevaluated integral of `integrand` in `var`, read as an antiderivative."""

    __slots__ = ("integrand", "var")

    def __init__(self, integrand: Expr, var: str):
        super().__init__()
        self.integrand = integrand
        self.var = var

    def _compute_hash(self):
        return hash(("i", self.var, self.integrand))

    def _eq(self, other):
        return (
            isinstance(other, Integral)
            and self.var == other.var
            and self.integrand == other.integrand
        )

    def _compute_key(self):
        return (3, self.var, self.integrand.sort_key())

    def _compute_free(self):
        return self.integrand.free_symbols | {self.var}


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Expr):
        super().__init__()
        self.base = base
        self.exp = exp

    def _compute_hash(self):
        return hash(("p", self.base, self.exp))

    def _eq(self, other):
        return isinstance(other, Pow) and self.base == other.base and self.exp == other.exp

    def _compute_key(self):
        return (4, self.base.sort_key(), self.exp.sort_key())

    def _compute_free(self):
        return self.base.free_symbols | self.exp.free_symbols


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        super().__init__()
        self.factors = factors

    def _compute_hash(self):
        return hash(("m",) + self.factors)

    def _eq(self, other):
        return isinstance(other, Mul) and self.factors == other.factors

    def _compute_key(self):
        return (5, tuple(f.sort_key() for f in self.factors))

    def _compute_free(self):
        s = frozenset()
        for f in self.factors:
            s |= f.free_symbols
        return s


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        super().__init__()
        self.terms = terms

    def _compute_hash(self):
        return hash(("a",) + self.terms)

    def _eq(self, other):
        return isinstance(other, Add) and self.terms == other.terms

    def _compute_key(self):
        return (6, tuple(t.sort_key() for t in self.terms))

    def _compute_free(self):
        s = frozenset()
        for t in self.terms:
            s |= t.free_symbols
        return s


# ---------------------------------------------------------------------------
# smart constructors
# ---------------------------------------------------------------------------

_CONST_CACHE: dict = {}


def const(v: Number) -> Const:
    f = v if isinstance(v, Fraction) else Fraction(v)
    node = _CONST_CACHE.get(f)
    if node is None:
        node = Const(f)
        if len(_CONST_CACHE) < 512:
            _CONST_CACHE[f] = node
    return node


ZERO = const(0)
ONE = const(1)
MINUS_ONE = const(-1)
HALF = const(Fraction(1, 2))

_SYM_CACHE: dict = {}


def sym(name: str) -> Sym:
    node = _SYM_CACHE.get(name)
    if node is None:
        node = Sym(name)
        _SYM_CACHE[name] = node
    return node


def syms(names: str):
    return tuple(sym(n) for n in names.replace(",", " ").split())


def _as_coeff_rest(t: Expr):
    """Split a canonical term into (rational coefficient, remaining factor)."""
    if isinstance(t, Const):
        return t.value, None
    if isinstance(t, Mul) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        if len(rest) == 1:
            return t.factors[0].value, rest[0]
        return t.factors[0].value, Mul(rest)
    return Fraction(1), t


def _scale(rest: Expr, c: Fraction) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((const(c),) + rest.factors)
    return Mul((const(c), rest))


def add(*terms) -> Expr:
    acc = Fraction(0)
    coeffs: dict = {}
    order: list = []
    stack = list(reversed(terms))
    while stack:
        t = stack.pop()
        if not isinstance(t, Expr):
            t = _coerce(t)
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
            continue
        if isinstance(t, Const):
            acc += t.value
            continue
        c, rest = _as_coeff_rest(t)
        if rest in coeffs:
            coeffs[rest] += c
        else:
            coeffs[rest] = c
            order.append(rest)
    out = []
    for rest in order:
        c = coeffs[rest]
        if c != 0:
            out.append(_scale(rest, c))
    out.sort(key=Expr.sort_key)
    if acc != 0:
        out.insert(0, const(acc))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def sum_sign(e: Expr):
    """Return (sign, normalized) with sign in {1,-1}, e == sign * normalized.

    The orientation is fixed by the sign of the coefficient of the term whose
    coefficient-stripped part sorts first, so s and -s always normalize to the
    same expression."""
    if isinstance(e, Add):
        best_key = None
        best_coeff = Fraction(1)
        for t in e.terms:
            c, rest = _as_coeff_rest(t)
            k = (-1,) if rest is None else rest.sort_key()
            if best_key is None or k < best_key:
                best_key = k
                best_coeff = c
        if best_coeff < 0:
            return -1, add(*[neg(t) for t in e.terms])
        return 1, e
    c, rest = _as_coeff_rest(e)
    if c < 0:
        return -1, _scale(rest, -c) if rest is not None else const(-c)
    return 1, e


def mul(*factors) -> Expr:
    coeff = Fraction(1)
    bases: dict = {}
    base_order: list = []
    exp_args: list = []
    stack = list(reversed(factors))
    while stack:
        f = stack.pop()
        if not isinstance(f, Expr):
            f = _coerce(f)
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
            continue
        if isinstance(f, Const):
            if f.value == 0:
                return ZERO
            coeff *= f.value
            continue
        if isinstance(f, Call) and f.fn == "exp":
            exp_args.append(f.arg)
            continue
        if isinstance(f, Pow):
            b, e = f.base, f.exp
        else:
            b, e = f, ONE
        if isinstance(b, Add) and isinstance(e, Const) and e.value.denominator == 1:
            s, nb = sum_sign(b)
            if s < 0:
                if e.value.numerator % 2:
                    coeff = -coeff
                b = nb
        if b in bases:
            bases[b].append(e)
        else:
            bases[b] = [e]
            base_order.append(b)
    out = []
    for b in base_order:
        exps = bases[b]
        etot = exps[0] if len(exps) == 1 else add(*exps)
        p = power(b, etot)
        if isinstance(p, Const):
            if p.value == 0:
                return ZERO
            coeff *= p.value
        elif isinstance(p, Mul):
            # distribution or sign extraction happened; fold the parts back in
            for g in p.factors:
                if isinstance(g, Const):
                    coeff *= g.value
                elif isinstance(g, Call) and g.fn == "exp":
                    exp_args.append(g.arg)
                else:
                    out.append(g)
            if coeff == 0:
                return ZERO
        elif isinstance(p, Call) and p.fn == "exp":
            exp_args.append(p.arg)
        else:
            out.append(p)
    if exp_args:
        ef = call("exp", add(*exp_args))
        if isinstance(ef, Const):
            coeff *= ef.value
        else:
            out.append(ef)
    if coeff == 0:
        return ZERO
    out.sort(key=Expr.sort_key)
    if not out:
        return const(coeff)
    if coeff == 1:
        return out[0] if len(out) == 1 else Mul(tuple(out))
    if len(out) == 1 and isinstance(out[0], Add):
        # distribute a bare rational coefficient so that c*(a+b) cancels
        # against expanded sums
        c = const(coeff)
        return add(*[mul(c, t) for t in out[0].terms])
    return Mul((const(coeff),) + tuple(out))


def div(a, b) -> Expr:
    return mul(_coerce(a), power(_coerce(b), MINUS_ONE))


def _exact_rational_pow(b: Fraction, e: Fraction):
    """b**e as an exact Fraction, or None when the result is not rational."""
    if e.denominator == 1:
        k = e.numerator
        if b == 0 and k < 0:
            raise ExprError("0 raised to a negative power")
        return b ** k
    if b == 0:
        if e > 0:
            return Fraction(0)
        raise ExprError("0 raised to a negative power")
    p, q = e.numerator, e.denominator
    if b < 0:
        if q % 2 == 0:
            return None
        r = _exact_rational_pow(-b, e)
        if r is None:
            return None
        return -r if p % 2 else r
    def iroot(n: int, k: int):
        if n == 1:
            return 1
        r = round(n ** (1.0 / k))
        for c in (r - 1, r, r + 1):
            if c > 0 and c ** k == n:
                return c
        return None
    rn = iroot(b.numerator, q)
    rd = iroot(b.denominator, q)
    if rn is None or rd is None:
        return None
    return Fraction(rn, rd) ** p


def _extract_sqrt_factor(f: Expr):
    """Split f -> (outside, inside) for a 1/2 power; outside**2 * inside == f
    and outside is guaranteed nonnegative."""
    if isinstance(f, Const) and f.value > 0:
        num, den = f.value.numerator, f.value.denominator
        def square_part(n):
            s, d, r = 1, 2, n
            while d * d <= r:
                while r % (d * d) == 0:
                    r //= d * d
                    s *= d
                d += 1
            return s, r
        sn, rn = square_part(num)
        sd, rd = square_part(den)
        return const(Fraction(sn, sd)), const(Fraction(rn, rd))
    if isinstance(f, Pow) and isinstance(f.exp, Const) and f.exp.value.denominator == 1:
        k = f.exp.value.numerator
        if k % 2 == 0 and (k // 2) % 2 == 0:
            # f = b^(2m) with m even: sqrt is b^m, nonnegative
            return Pow(f.base, const(k // 2)), ONE
    return ONE, f


def power(b: Expr, e) -> Expr:
    if not isinstance(b, Expr):
        b = _coerce(b)
    if not isinstance(e, Expr):
        e = _coerce(e)
    if isinstance(e, Const):
        if e.value == 0:
            return ONE
        if e.value == 1:
            return b
    if isinstance(b, Const):
        if b.value == 1:
            return ONE
        if isinstance(e, Const):
            r = _exact_rational_pow(b.value, e.value)
            if r is not None:
                return const(r)
    if isinstance(b, Pow):
        if isinstance(e, Const) and e.value.denominator == 1:
            return power(b.base, mul(b.exp, e))
    if isinstance(b, Call) and b.fn == "exp":
        return call("exp", mul(e, b.arg))
    if isinstance(b, Mul):
        if isinstance(e, Const) and e.value.denominator == 1:
            return mul(*[power(f, e) for f in b.factors])
        if isinstance(e, Const) and e.value == Fraction(1, 2):
            outs, ins = [], []
            for f in b.factors:
                o, i = _extract_sqrt_factor(f)
                if o != ONE:
                    outs.append(o)
                if i != ONE:
                    ins.append(i)
            if outs:
                inner = mul(*ins) if ins else ONE
                return mul(*(outs + [power(inner, HALF)]))
    if isinstance(b, Const) and isinstance(e, Const) and e.value == Fraction(1, 2):
        o, i = _extract_sqrt_factor(b)
        if o != ONE:
            return mul(o, Pow(i, HALF)) if i != ONE else o
    if isinstance(b, Add) and isinstance(e, Const) and e.value.denominator == 1:
        s, nb = sum_sign(b)
        if s < 0:
            p = Pow(nb, e)
            return mul(MINUS_ONE, p) if e.value.numerator % 2 else p
    return Pow(b, e)


def call(fn: str, arg: Expr, _normalized: bool = False) -> Expr:
    if not isinstance(arg, Expr):
        arg = _coerce(arg)
    if fn not in FUNCTIONS:
        raise ExprError("unknown function %r" % fn)
    if fn == "tan":
        return mul(call("sin", arg), power(call("cos", arg), MINUS_ONE))
    if fn == "sqrt":
        return power(arg, HALF)
    if not _normalized and not isinstance(arg, (Const, Sym)):
        # normalize the argument shape so equal arguments give equal atoms
        from .ratnorm import ratnorm

        arg = ratnorm(arg)
    if fn == "exp" and isinstance(arg, Add):
        # split off logarithmic summands: exp(c*ln(a) + r) = a^c * exp(r)
        log_parts, rest = [], []
        for t in arg.terms:
            c, r = _as_coeff_rest(t)
            if isinstance(r, Call) and r.fn == "ln":
                log_parts.append(power(r.arg, const(c)))
            else:
                rest.append(t)
        if log_parts:
            return mul(*log_parts, call("exp", add(*rest), _normalized=True))
    if fn == "exp" and isinstance(arg, Mul):
        c, r = _as_coeff_rest(arg)
        if isinstance(r, Call) and r.fn == "ln":
            return power(r.arg, const(c))
    if isinstance(arg, Const):
        v = arg.value
        if fn == "exp" and v == 0:
            return ONE
        if fn == "ln" and v == 1:
            return ZERO
        if fn in ("sin", "arctan") and v == 0:
            return ZERO
        if fn == "cos" and v == 0:
            return ONE
    if fn == "exp" and isinstance(arg, Call) and arg.fn == "ln":
        return arg.arg
    if fn == "ln" and isinstance(arg, Call) and arg.fn == "exp":
        return arg.arg
    if fn in _ODD_FUNCS:
        s, na = sum_sign(arg)
        if s < 0:
            return mul(MINUS_ONE, Call(fn, na))
    elif fn in _EVEN_FUNCS:
        s, na = sum_sign(arg)
        if s < 0:
            arg = na
    return Call(fn, arg)


def integral(integrand: Expr, var: str) -> Expr:
    if not isinstance(integrand, Expr):
        integrand = _coerce(integrand)
    if integrand == ZERO:
        return ZERO
    return Integral(integrand, var)


# ---------------------------------------------------------------------------
# differentiation and substitution
# ---------------------------------------------------------------------------

_diff_cache: dict = {}


def diff(e: Expr, v: str) -> Expr:
    """Partial derivative of e with respect to the symbol named v."""
    if v not in e.free_symbols:
        return ZERO
    key = (e, v)
    r = _diff_cache.get(key)
    if r is not None:
        return r
    if isinstance(e, Sym):
        r = ONE if e.name == v else ZERO
    elif isinstance(e, Add):
        r = add(*[diff(t, v) for t in e.terms])
    elif isinstance(e, Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = diff(f, v)
            if df == ZERO:
                continue
            parts.append(mul(*(fs[:i] + (df,) + fs[i + 1:])))
        r = add(*parts)
    elif isinstance(e, Pow):
        b, ex = e.base, e.exp
        if isinstance(ex, Const):
            r = mul(ex, power(b, add(ex, MINUS_ONE)), diff(b, v))
        else:
            term1 = mul(diff(ex, v), call("ln", b))
            term2 = mul(ex, diff(b, v), power(b, MINUS_ONE))
            r = mul(e, add(term1, term2))
    elif isinstance(e, Call):
        da = diff(e.arg, v)
        if e.fn == "exp":
            r = mul(e, da)
        elif e.fn == "ln":
            r = mul(da, power(e.arg, MINUS_ONE))
        elif e.fn == "sin":
            r = mul(call("cos", e.arg), da)
        elif e.fn == "cos":
            r = mul(MINUS_ONE, call("sin", e.arg), da)
        elif e.fn == "arctan":
            r = mul(da, power(add(ONE, power(e.arg, const(2))), MINUS_ONE))
        else:  # pragma: no cover
            raise ExprError("no derivative rule for %s" % e.fn)
    elif isinstance(e, Integral):
        if e.var == v:
            r = e.integrand
        else:
            r = integral(diff(e.integrand, v), e.var)
    else:  # pragma: no cover
        raise ExprError("cannot differentiate %r" % e)
    if len(_diff_cache) > 200000:
        _diff_cache.clear()
    _diff_cache[key] = r
    return r


def substitute(e: Expr, bindings: dict) -> Expr:
    """Simultaneous substitution of symbols by expressions.

    Keys are symbol names; values are Expr (or int/Fraction)."""
    bd = {k: _coerce(v) for k, v in bindings.items()}

    def walk(n: Expr) -> Expr:
        if not (n.free_symbols & bd.keys()):
            return n
        if isinstance(n, Sym):
            return bd.get(n.name, n)
        if isinstance(n, Add):
            return add(*[walk(t) for t in n.terms])
        if isinstance(n, Mul):
            return mul(*[walk(f) for f in n.factors])
        if isinstance(n, Pow):
            return power(walk(n.base), walk(n.exp))
        if isinstance(n, Call):
            return call(n.fn, walk(n.arg))
        if isinstance(n, Integral):
            if n.var in bd:
                raise ExprError(
                    "cannot substitute the variable %r of an unevaluated integral" % n.var
                )
            return integral(walk(n.integrand), n.var)
        return n

    return walk(e)


def replace_subtree(e: Expr, target: Expr, repl: Expr) -> Expr:
    """Replace every structural occurrence of `target` inside e by `repl`."""

    def walk(n: Expr) -> Expr:
        if n == target:
            return repl
        if isinstance(n, Add):
            return add(*[walk(t) for t in n.terms])
        if isinstance(n, Mul):
            return mul(*[walk(f) for f in n.factors])
        if isinstance(n, Pow):
            return power(walk(n.base), walk(n.exp))
        if isinstance(n, Call):
            return call(n.fn, walk(n.arg))
        if isinstance(n, Integral):
            return integral(walk(n.integrand), n.var)
        return n

    return walk(e)


def contains_integral(e: Expr, var: str | None = None) -> bool:
    if isinstance(e, Integral):
        if var is None or e.var == var:
            return True
        return contains_integral(e.integrand, var)
    if isinstance(e, Add):
        return any(contains_integral(t, var) for t in e.terms)
    if isinstance(e, Mul):
        return any(contains_integral(f, var) for f in e.factors)
    if isinstance(e, Pow):
        return contains_integral(e.base, var) or contains_integral(e.exp, var)
    if isinstance(e, Call):
        return contains_integral(e.arg, var)
    return False


def subexpressions(e: Expr) -> Iterable[Expr]:
    """Iterate over all nodes of e (including e itself)."""
    yield e
    if isinstance(e, Add):
        for t in e.terms:
            yield from subexpressions(t)
    elif isinstance(e, Mul):
        for f in e.factors:
            yield from subexpressions(f)
    elif isinstance(e, Pow):
        yield from subexpressions(e.base)
        yield from subexpressions(e.exp)
    elif isinstance(e, Call):
        yield from subexpressions(e.arg)
    elif isinstance(e, Integral):
        yield from subexpressions(e.integrand)
