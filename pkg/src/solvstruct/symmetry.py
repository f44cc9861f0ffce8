"""Local symmetries of a scalar ODE.

Fields are given either by a pair (xi, eta) to prolong, or by a generating
function phi producing the evolutive field with components phi, D(phi),
D^2(phi), ...  Symmetry verification is two-tier like the zero test: the
linearized residual of the determining equation, and the multivector test
against the flow distribution.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .geometry import (
    Chart, DifferentialForm, OdeProblem, VectorField,
    contract_fields, lie_bracket, volume_form,
)
from .symbolic.expr import Expr, ZERO, add, const, diff, mul, neg, sym
from .symbolic.numeric import DomainError, eval_numeric
from .symbolic.parser import parse
from .symbolic.ratnorm import ratnorm
from .symbolic.zero import DEFAULT_POLICY, ZeroPolicy, zero_check

import random

import numpy as np


class NonClosureError(ValueError):
    def __init__(self, i, j, message):
        super().__init__(message)
        self.pair = (i, j)


def prolong_components(xi: Expr | str, eta: Expr | str, ode: OdeProblem) -> VectorField:
    """Prolong xi*d_x + eta*d_u through eta_i = D(eta_{i-1}) - u_i D(xi),
    with D the restricted total derivative of the equation."""
    from .geometry import total_derivative_field

    if isinstance(xi, str):
        xi = parse(xi)
    if isinstance(eta, str):
        eta = parse(eta)
    Dx = total_derivative_field(ode)
    chart = ode.chart
    comps = {}
    if xi != ZERO:
        comps["x"] = xi
    dxi = Dx.apply(xi)
    cur = eta
    for i, name in enumerate(chart.names[1:]):
        if cur != ZERO:
            comps[name] = cur
        nxt = chart.names[i + 2] if i + 2 < len(chart.names) else None
        if nxt is not None:
            cur = add(Dx.apply(cur), neg(mul(sym(nxt), dxi)))
        else:
            break
    return VectorField(chart, comps)


def evolutive_field(phi: Expr | str, ode: OdeProblem) -> VectorField:
    """Evolutive field of a generating function: components u_i -> D^i(phi)."""
    from .geometry import total_derivative_field

    if isinstance(phi, str):
        phi = parse(phi)
    Dx = total_derivative_field(ode)
    comps = {}
    cur = phi
    for name in ode.chart.names[1:]:
        if cur != ZERO:
            comps[name] = cur
        cur = Dx.apply(cur)
    return VectorField(ode.chart, comps)


def linearized_determining_residual(phi: Expr | str, ode: OdeProblem) -> Expr:
    """Residual D^k(phi) - sum_i (df/du_i) D^i(phi); zero iff phi generates
    a symmetry of the equation."""
    from .geometry import total_derivative_field

    if isinstance(phi, str):
        phi = parse(phi)
    Dx = total_derivative_field(ode)
    derivs = [phi]
    for _ in range(ode.order):
        derivs.append(Dx.apply(derivs[-1]))
    resid = derivs[ode.order]
    for i, name in enumerate(ode.chart.names[1:]):
        resid = add(resid, neg(mul(diff(ode.f, name), derivs[i])))
    return ratnorm(resid)


def multivector_symmetry_residuals(X: VectorField, dist) -> list:
    """Residual forms of the multivector symmetry condition of X with respect
    to the distribution spanned by `dist`; all zero iff X is a symmetry."""
    dist = list(dist)
    if not dist:
        raise ValueError("empty distribution")
    chart = X.chart
    omega = volume_form(chart)
    inner = contract_fields(dist, omega)
    out = []
    for Xi in dist:
        L = lie_bracket(X, Xi)
        out.append(contract_fields([L], inner).normalized())
    return out


def is_symmetry_of_distribution(X: VectorField, dist, policy: ZeroPolicy = DEFAULT_POLICY):
    """Two-tier verdict: (accepted, tier, residual forms)."""
    residuals = multivector_symmetry_residuals(X, dist)
    tier = "symbolic"
    for r in residuals:
        for e in r.components.values():
            zc = zero_check(e, policy)
            if not zc.is_zero:
                return False, zc.tier, residuals
            if zc.tier == "numeric":
                tier = "numeric"
    return True, tier, residuals


# ---------------------------------------------------------------------------
# commutator tables and solvability
# ---------------------------------------------------------------------------

@dataclass
class SymmetryAlgebra:
    fields: list
    names: list
    table: dict                      # (i, j) -> tuple of Fractions, i < j
    solvable: bool
    derived_series_dims: list = field(default_factory=list)

    def constants(self, i: int, j: int):
        if i == j:
            return tuple(Fraction(0) for _ in self.fields)
        if i < j:
            return self.table[(i, j)]
        return tuple(-c for c in self.table[(j, i)])


def _sample_points(chart: Chart, n: int, seed: int):
    rng = random.Random("commutators|%d|%s" % (seed, ",".join(chart.names)))
    return [{name: rng.uniform(0.5, 2.0) for name in chart.names} for _ in range(n)]


def _rationalize(x: float):
    f = Fraction(x).limit_denominator(10 ** 6)
    if abs(float(f) - x) > 1e-6:
        return None
    if abs(x) < 1e-8:
        return Fraction(0)
    return f


def commutator_table(fields, names=None, policy: ZeroPolicy = DEFAULT_POLICY) -> SymmetryAlgebra:
    """Structure constants of a list of fields, solved numerically at random
    points and then verified symbolically; solvability from the derived series."""
    fields = list(fields)
    r = len(fields)
    if names is None:
        names = ["X%d" % (i + 1) for i in range(r)]
    chart = fields[0].chart
    points = _sample_points(chart, 3, policy.seed)

    def stack(vf: VectorField):
        vals = []
        for p in points:
            for name in chart.names:
                vals.append(eval_numeric(vf.component(name), p))
        return vals

    try:
        cols = np.array([stack(X) for X in fields]).T
    except DomainError as exc:
        raise NonClosureError(-1, -1, "singular sample while building the table: %s" % exc)
    table = {}
    for i in range(r):
        for j in range(i + 1, r):
            B = lie_bracket(fields[i], fields[j])
            rhs = np.array(stack(B))
            sol, *_ = np.linalg.lstsq(cols, rhs, rcond=None)
            consts = []
            for x in sol:
                f = _rationalize(float(x))
                if f is None:
                    raise NonClosureError(
                        i, j, "bracket [%s,%s] has non-rational coefficients" % (names[i], names[j]))
                consts.append(f)
            resid = B
            for m, c in enumerate(consts):
                if c:
                    resid = resid.plus(fields[m].scaled(const(-c)))
            for name, e in resid.components.items():
                zc = zero_check(e, policy)
                if not zc.is_zero:
                    raise NonClosureError(
                        i, j,
                        "bracket [%s,%s] does not close in the span (component %s)"
                        % (names[i], names[j], name))
            table[(i, j)] = tuple(consts)
    solvable, dims = _solvable_from_table(table, r)
    return SymmetryAlgebra(fields, list(names), table, solvable, dims)


def _solvable_from_table(table: dict, r: int):
    """Derived series of the abstract algebra given by structure constants."""

    def bracket_vec(u, v):
        w = [Fraction(0)] * r
        for i in range(r):
            if not u[i]:
                continue
            for j in range(r):
                if not v[j] or i == j:
                    continue
                cs = table[(i, j)] if i < j else tuple(-c for c in table[(j, i)])
                for m in range(r):
                    w[m] += u[i] * v[j] * cs[m]
        return w

    def rref_basis(vectors):
        rows = [list(v) for v in vectors]
        basis = []
        for row in rows:
            cur = list(row)
            for b in basis:
                lead = next(k for k, c in enumerate(b) if c)
                if cur[lead]:
                    f = cur[lead] / b[lead]
                    cur = [c - f * bc for c, bc in zip(cur, b)]
            if any(cur):
                basis.append(cur)
        return basis

    current = [[Fraction(int(i == j)) for j in range(r)] for i in range(r)]
    dims = [r]
    for _ in range(r + 1):
        brs = []
        for a in range(len(current)):
            for b in range(a + 1, len(current)):
                w = bracket_vec(current[a], current[b])
                if any(w):
                    brs.append(w)
        nxt = rref_basis(brs)
        dims.append(len(nxt))
        if len(nxt) == 0:
            return True, dims
        if len(nxt) == len(current):
            return False, dims
        current = nxt
    return False, dims
