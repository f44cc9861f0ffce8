"""One-dimensional coverings of a scalar ODE.

A covering extends the equation manifold by a variable w with w' = H; its
flow field is the base flow plus H d_w.  When H is free of w the covering
hosts nonlocal symmetries with generating functions of the shape
e^w * phi0(x, u, u1, ...), and the base symmetry algebra lifts whenever H is
a joint invariant.
"""
from __future__ import annotations

from dataclasses import dataclass

from .geometry import Chart, ChartError, OdeProblem, VectorField, total_derivative_field
from .symbolic.expr import Expr, ZERO, add, diff, mul, neg
from .symbolic.parser import parse
from .symbolic.ratnorm import ratnorm
from .symbolic.zero import DEFAULT_POLICY, ZeroPolicy, is_zero, zero_check


class CoveringSystem:
    """Base ODE extended by w' = H on the chart (x, u, ..., u_{k-1}, w)."""

    def __init__(self, base: OdeProblem, H: Expr | str):
        if isinstance(H, str):
            H = parse(H)
        self.base = base
        self.H = H
        self.chart = Chart.for_ode(base.order, covering=True)
        bad = H.free_symbols - set(self.chart.names)
        if bad:
            raise ChartError("H uses symbols outside the covering chart: %s" % sorted(bad))

    @property
    def is_lambda_covering(self) -> bool:
        """True when H lives on the equation manifold itself (no w)."""
        return "w" not in self.H.free_symbols

    def lift(self, X: VectorField) -> VectorField:
        """Reinterpret a base-chart field on the covering chart (no w part)."""
        return VectorField(self.chart, dict(X.components))

    def __repr__(self):
        return "CoveringSystem(order=%d, H=%r)" % (self.base.order, self.H)


def covering_total_derivative(cov: CoveringSystem) -> VectorField:
    """Extended flow field: base total derivative plus H d_w."""
    base = total_derivative_field(cov.base)
    comps = dict(base.components)
    if cov.H != ZERO:
        comps["w"] = cov.H
    return VectorField(cov.chart, comps)


@dataclass
class NonlocalSymmetry:
    phi1: Expr
    phi2: Expr
    field: VectorField


def nonlocal_symmetry_field(phi1: Expr | str, phi2: Expr | str,
                            cov: CoveringSystem) -> NonlocalSymmetry:
    """Evolutive covering field: u_i components iterate the extended total
    derivative on phi1, the w component is phi2."""
    if isinstance(phi1, str):
        phi1 = parse(phi1)
    if isinstance(phi2, str):
        phi2 = parse(phi2)
    Dt = covering_total_derivative(cov)
    comps = {}
    cur = phi1
    for name in cov.chart.names[1:-1]:
        if cur != ZERO:
            comps[name] = cur
        cur = Dt.apply(cur)
    if phi2 != ZERO:
        comps["w"] = phi2
    return NonlocalSymmetry(phi1, phi2, VectorField(cov.chart, comps))


@dataclass
class SymmetryVerdict:
    accepted: bool
    tier: str
    residuals: list


def is_nonlocal_symmetry(Y: NonlocalSymmetry | VectorField,
                         cov: CoveringSystem,
                         policy: ZeroPolicy = DEFAULT_POLICY) -> SymmetryVerdict:
    """Multivector symmetry test of Y against the covering flow."""
    from .symmetry import is_symmetry_of_distribution

    field = Y.field if isinstance(Y, NonlocalSymmetry) else Y
    Dt = covering_total_derivative(cov)
    accepted, tier, residuals = is_symmetry_of_distribution(field, [Dt], policy)
    return SymmetryVerdict(accepted, tier, residuals)


@dataclass
class InheritanceEntry:
    name: str
    is_base_symmetry: bool
    inherited: bool
    obstruction: Expr | None


@dataclass
class InheritanceReport:
    entries: list
    gains_dw: bool
    extended_solvable: bool | None

    def inherited_names(self):
        return [e.name for e in self.entries if e.inherited]


def inherits_algebra(fields, cov: CoveringSystem, names=None,
                     policy: ZeroPolicy = DEFAULT_POLICY) -> InheritanceReport:
    """Which base symmetries survive on the covering: X is inherited iff
    X(H) = 0.  When H is free of w the report also carries the extension by
    d_w and its solvability."""
    from .symmetry import commutator_table, is_symmetry_of_distribution, NonClosureError
    from .geometry import total_derivative_field

    fields = list(fields)
    if names is None:
        names = ["X%d" % (i + 1) for i in range(len(fields))]
    Dbar = total_derivative_field(cov.base)
    entries = []
    lifted = []
    for name, X in zip(names, fields):
        base_ok, _tier, _res = is_symmetry_of_distribution(X, [Dbar], policy)
        XH = ratnorm(cov.lift(X).apply(cov.H))
        inherited = bool(base_ok and zero_check(XH, policy).is_zero)
        entries.append(InheritanceEntry(name, base_ok, inherited,
                                        None if inherited else XH))
        if inherited:
            lifted.append(cov.lift(X))
    gains_dw = cov.is_lambda_covering
    extended_solvable = None
    if gains_dw and lifted:
        dw = VectorField(cov.chart, {"w": "1"})
        try:
            algebra = commutator_table(lifted + [dw], policy=policy)
            extended_solvable = algebra.solvable
        except NonClosureError:
            extended_solvable = None
    return InheritanceReport(entries, gains_dw, extended_solvable)
