"""Finite-chart exterior calculus on the manifold of a scalar ODE.

A k-th order equation u_k = f(x, u, u1, ..., u_{k-1}) lives on the chart
(x, u, u1, ..., u_{k-1}); appending the covering variable w gives the chart
of a one-dimensional covering.  Vector fields are sparse coordinate ->
coefficient maps, p-forms are sparse maps from strictly increasing
coordinate-index tuples to coefficients (antisymmetry is by representation).
"""
from __future__ import annotations

from itertools import combinations

from .symbolic.expr import Expr, ZERO, ONE, add, const, diff, mul, neg, power, sym
from .symbolic.parser import parse
from .symbolic.ratnorm import is_zero_poly, ratnorm


class ChartError(ValueError):
    pass


class Chart:
    """Ordered list of coordinate names."""

    __slots__ = ("names", "index", "order", "has_covering_variable")

    def __init__(self, names, order: int | None = None, has_covering_variable: bool = False):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ChartError("coordinate names must be distinct: %r" % (names,))
        self.names = names
        self.index = {n: i for i, n in enumerate(names)}
        self.order = order
        self.has_covering_variable = has_covering_variable

    @classmethod
    def for_ode(cls, k: int, covering: bool = False) -> "Chart":
        if not 1 <= k <= 10:
            raise ChartError("supported orders are 1..10, got %d" % k)
        names = ["x", "u"] + ["u%d" % i for i in range(1, k)]
        if covering:
            names.append("w")
        return cls(names, order=k, has_covering_variable=covering)

    @property
    def dim(self) -> int:
        return len(self.names)

    def without(self, name: str) -> "Chart":
        if name not in self.index:
            raise ChartError("no coordinate %r in chart %r" % (name, self.names))
        return Chart(tuple(n for n in self.names if n != name))

    def __eq__(self, other):
        return isinstance(other, Chart) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return "Chart%r" % (self.names,)


class OdeProblem:
    """Scalar ODE u_k = f in normal form on its natural chart."""

    def __init__(self, order: int, f: Expr | str):
        if isinstance(f, str):
            f = parse(f)
        self.order = order
        self.f = f
        self.chart = Chart.for_ode(order)
        bad = f.free_symbols - set(self.chart.names)
        if bad:
            raise ChartError(
                "right-hand side uses symbols outside the chart: %s" % sorted(bad))

    def __repr__(self):
        return "OdeProblem(order=%d, f=%r)" % (self.order, self.f)


class VectorField:
    """Sparse vector field: missing components are zero."""

    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: dict):
        self.chart = chart
        comps = {}
        for name, e in components.items():
            if name not in chart.index:
                raise ChartError("component %r outside chart %r" % (name, chart.names))
            if isinstance(e, str):
                e = parse(e)
            if e != ZERO:
                comps[name] = e
        self.components = comps

    def component(self, name: str) -> Expr:
        return self.components.get(name, ZERO)

    def apply(self, g: Expr) -> Expr:
        """Directional derivative X(g)."""
        return add(*[mul(e, diff(g, name)) for name, e in self.components.items()])

    def scaled(self, c: Expr) -> "VectorField":
        return VectorField(self.chart, {n: mul(c, e) for n, e in self.components.items()})

    def plus(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        comps = dict(self.components)
        for n, e in other.components.items():
            comps[n] = add(comps.get(n, ZERO), e)
        return VectorField(self.chart, comps)

    def is_zero_field(self, policy=None) -> bool:
        from .symbolic.zero import DEFAULT_POLICY, is_zero

        policy = policy or DEFAULT_POLICY
        return all(is_zero(e, policy) for e in self.components.values())

    def __repr__(self):
        parts = ["%s: %r" % (n, e) for n, e in sorted(self.components.items())]
        return "VectorField{%s}" % ", ".join(parts)


class DifferentialForm:
    """Sparse p-form; keys are strictly increasing coordinate index tuples."""

    __slots__ = ("chart", "degree", "components")

    def __init__(self, chart: Chart, degree: int, components: dict):
        self.chart = chart
        self.degree = degree
        comps = {}
        for key, e in components.items():
            key = tuple(key)
            if len(key) != degree or list(key) != sorted(set(key)):
                raise ChartError("bad %d-form key %r" % (degree, key))
            if key and (key[0] < 0 or key[-1] >= chart.dim):
                raise ChartError("key %r outside chart of dimension %d" % (key, chart.dim))
            if isinstance(e, str):
                e = parse(e)
            if e != ZERO:
                comps[key] = e
        self.components = comps

    @classmethod
    def from_coeffs(cls, chart: Chart, coeffs: dict) -> "DifferentialForm":
        """Build a 1-form from a coordinate-name -> coefficient map."""
        comps = {}
        degree = 1
        for name, e in coeffs.items():
            comps[(chart.index[name],)] = e
        return cls(chart, degree, comps)

    def coefficient(self, *names) -> Expr:
        key = tuple(sorted(self.chart.index[n] for n in names))
        return self.components.get(key, ZERO)

    def is_zero_form(self) -> bool:
        return not self.components

    def map_coefficients(self, fn) -> "DifferentialForm":
        return DifferentialForm(
            self.chart, self.degree, {k: fn(e) for k, e in self.components.items()})

    def scaled(self, c: Expr) -> "DifferentialForm":
        return self.map_coefficients(lambda e: mul(c, e))

    def plus(self, other: "DifferentialForm") -> "DifferentialForm":
        _same_chart(self, other)
        if self.degree != other.degree:
            raise ChartError("degree mismatch in form sum")
        comps = dict(self.components)
        for k, e in other.components.items():
            comps[k] = add(comps.get(k, ZERO), e)
        return DifferentialForm(self.chart, self.degree, comps)

    def minus(self, other: "DifferentialForm") -> "DifferentialForm":
        return self.plus(other.scaled(const(-1)))

    def normalized(self) -> "DifferentialForm":
        return self.map_coefficients(ratnorm)

    def __repr__(self):
        names = self.chart.names
        parts = []
        for k in sorted(self.components):
            basis = "^".join("d%s" % names[i] for i in k) or "1"
            parts.append("(%r) %s" % (self.components[k], basis))
        return " + ".join(parts) if parts else "0"


def _same_chart(a, b):
    if a.chart != b.chart:
        raise ChartError("chart mismatch: %r vs %r" % (a.chart.names, b.chart.names))


# ---------------------------------------------------------------------------
# basic fields and forms
# ---------------------------------------------------------------------------

def total_derivative_field(ode: OdeProblem) -> VectorField:
    """The flow field x: 1, u: u1, ..., u_{k-2}: u_{k-1}, u_{k-1}: f."""
    chart = ode.chart
    comps = {"x": ONE}
    for i, name in enumerate(chart.names[1:-1], start=1):
        comps[name] = sym(chart.names[i + 1])
    comps[chart.names[-1]] = ode.f
    return VectorField(chart, comps)


def volume_form(chart: Chart) -> DifferentialForm:
    return DifferentialForm(chart, chart.dim, {tuple(range(chart.dim)): ONE})


def differential(g: Expr, chart: Chart) -> DifferentialForm:
    comps = {}
    for i, name in enumerate(chart.names):
        d = diff(g, name)
        if d != ZERO:
            comps[(i,)] = d
    return DifferentialForm(chart, 1, comps)


# ---------------------------------------------------------------------------
# exterior algebra
# ---------------------------------------------------------------------------

def _merge_sign(k1: tuple, k2: tuple):
    """Merge two strictly increasing tuples; return (sign, merged) or None."""
    merged = []
    i = j = 0
    sign = 1
    while i < len(k1) and j < len(k2):
        a, b = k1[i], k2[j]
        if a == b:
            return None
        if a < b:
            merged.append(a)
            i += 1
        else:
            # b jumps over the remaining len(k1) - i entries of k1
            if (len(k1) - i) % 2:
                sign = -sign
            merged.append(b)
            j += 1
    merged.extend(k1[i:])
    merged.extend(k2[j:])
    return sign, tuple(merged)


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    _same_chart(a, b)
    degree = a.degree + b.degree
    chart = a.chart
    if degree > chart.dim:
        return DifferentialForm(chart, degree if degree <= chart.dim else chart.dim, {})
    comps: dict = {}
    for k1, e1 in a.components.items():
        for k2, e2 in b.components.items():
            ms = _merge_sign(k1, k2)
            if ms is None:
                continue
            sign, key = ms
            term = mul(const(sign), e1, e2)
            comps[key] = add(comps.get(key, ZERO), term)
    return DifferentialForm(chart, degree, comps)


def wedge_all(forms) -> DifferentialForm:
    forms = list(forms)
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def interior_product(X: VectorField, a: DifferentialForm) -> DifferentialForm:
    """Insertion of X into the first slot of a."""
    _same_chart(X, a)
    if a.degree < 1:
        raise ChartError("interior product needs a form of degree >= 1")
    comps: dict = {}
    idx = {X.chart.index[n]: e for n, e in X.components.items()}
    for key, e in a.components.items():
        for pos, i in enumerate(key):
            xi = idx.get(i)
            if xi is None:
                continue
            sign = -1 if pos % 2 else 1
            nk = key[:pos] + key[pos + 1:]
            term = mul(const(sign), xi, e)
            comps[nk] = add(comps.get(nk, ZERO), term)
    return DifferentialForm(a.chart, a.degree - 1, comps)


def exterior_derivative(a: DifferentialForm) -> DifferentialForm:
    chart = a.chart
    comps: dict = {}
    for key, e in a.components.items():
        for j, name in enumerate(chart.names):
            de = diff(e, name)
            if de == ZERO:
                continue
            ms = _merge_sign((j,), key)
            if ms is None:
                continue
            sign, nk = ms
            term = mul(const(sign), de)
            comps[nk] = add(comps.get(nk, ZERO), term)
    return DifferentialForm(chart, a.degree + 1, comps)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    _same_chart(X, Y)
    comps = {}
    for name in X.chart.names:
        e = add(X.apply(Y.component(name)), neg(Y.apply(X.component(name))))
        if e != ZERO:
            comps[name] = e
    return VectorField(X.chart, comps)


def lie_derivative(X: VectorField, Y: VectorField) -> VectorField:
    """Lie derivative of the field Y along X (alias of the bracket)."""
    return lie_bracket(X, Y)


def contract_fields(fields, form: DifferentialForm) -> DifferentialForm:
    """Iterated insertion; the last field in the list is inserted first."""
    out = form
    for X in reversed(list(fields)):
        out = interior_product(X, out)
    return out


def form_is_zero(a: DifferentialForm, policy=None) -> bool:
    from .symbolic.zero import DEFAULT_POLICY, is_zero

    policy = policy or DEFAULT_POLICY
    return all(is_zero(e, policy) for e in a.components.values())


def scalar_of(form: DifferentialForm) -> Expr:
    """Coefficient of a 0-form."""
    if form.degree != 0:
        raise ChartError("expected a 0-form, got degree %d" % form.degree)
    return form.components.get((), ZERO)
