"""Quadrature cascade for a verified solvable structure.

The last coframe form is closed outright and integrates to a potential; each
earlier form becomes closed after restriction to the accumulated level
manifolds, where restriction solves I = c for one chart coordinate
(highest-index derivative coordinate first) and substitutes it away.  The
collected relations I_j = c_j give the general solution implicitly; when the
final relation solves for u explicitly, both branches are carried, constants
get re-absorbed through monotone one-constant rewrites, and survivors are
renamed C1, C2, ...
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .covering import CoveringSystem
from .geometry import (
    Chart, ChartError, DifferentialForm, OdeProblem, VectorField,
    differential, exterior_derivative, total_derivative_field, volume_form,
    wedge, wedge_all,
)
from .structure import SolvableStructure, omega_forms
from .symbolic.antideriv import antiderivative
from .symbolic.expr import (
    Add, Call, Expr, ExprError, Integral, Mul, Pow, Sym, ZERO, ONE,
    add, call, const, contains_integral, diff, integral, mul, neg, power,
    subexpressions, substitute, sym,
)
from .symbolic.parser import parse
from .symbolic.printer import to_str
from .symbolic.ratnorm import is_zero_poly, poly_coeffs_in, ratnorm
from .symbolic.solve import solve_for
from .symbolic.zero import DEFAULT_POLICY, ZeroPolicy, zero_check


class RemainderInconsistency(ArithmeticError):
    pass


class NotClosed(ArithmeticError):
    pass


class NonSymmetry(ValueError):
    pass


@dataclass
class FirstIntegral:
    expr: Expr
    constant: str
    omega_index: int
    form: DifferentialForm          # the restricted form the potential integrates
    closedness_tier: str            # symbolic | numeric | mod-ideal
    verified_tier: str              # tier of the d(I) = omega check
    contains_covering_variable: bool = False

    def __repr__(self):
        return "FirstIntegral(%s = %s)" % (self.constant, to_str(self.expr))


@dataclass
class Elimination:
    constant: str
    coordinate: str
    solution: Expr


@dataclass
class Constraint:
    constant: str
    expr: Expr      # I - c kept implicit on the current chart


@dataclass
class ReductionResult:
    integrals: list
    eliminations: list
    constraints: list
    implicit: list                  # (constant, Expr) pairs, base solution
    explicit_branches: list         # expressions for u, after re-absorption
    explicit_raw: list              # before re-absorption
    constants: list                 # (name, "essential" | "inessential")
    reabsorptions: list             # (replaced subexpression, new name)
    notes: list = field(default_factory=list)

    @property
    def essential_constants(self):
        return [n for n, kind in self.constants if kind == "essential"]


# ---------------------------------------------------------------------------
# potential reconstruction
# ---------------------------------------------------------------------------

def integrate_exact(form: DifferentialForm, policy: ZeroPolicy = DEFAULT_POLICY) -> Expr:
    """Reconstruct F with dF = form, coordinate by coordinate.

    The caller is responsible for checking closedness; a closed form whose
    component antiderivatives succeed yields a closed-form potential, and
    unevaluated integral pieces are tolerated as long as their integrands do
    not involve later coordinates."""
    if form.degree != 1:
        raise ChartError("can only integrate 1-forms, got degree %d" % form.degree)
    chart = form.chart
    F = ZERO
    rho = form
    for name in chart.names:
        a = ratnorm(rho.coefficient(name))
        if is_zero_poly(a):
            continue
        g = antiderivative(a, name)
        F = add(F, g)
        rho = rho.minus(differential(g, chart)).map_coefficients(ratnorm)
        resid = rho.coefficient(name)
        if not zero_check(resid, policy).is_zero:
            raise RemainderInconsistency(
                "component d%s did not vanish after integration (residual %s)"
                % (name, to_str(resid)))
        for key, e in rho.components.items():
            if name in e.free_symbols and not zero_check(e, policy).is_zero:
                raise RemainderInconsistency(
                    "remainder re-involves %s in component %r" % (name, key))
    return F


def verify_potential(F: Expr, form: DifferentialForm, policy: ZeroPolicy = DEFAULT_POLICY):
    """Check d(F) == form componentwise; returns (ok, tier)."""
    dF = differential(F, form.chart)
    residual = dF.minus(form).map_coefficients(ratnorm)
    tier = "symbolic"
    for e in residual.components.values():
        zc = zero_check(e, policy)
        if not zc.is_zero:
            return False, zc.tier
        if zc.tier == "numeric":
            tier = "numeric"
    return True, tier


# ---------------------------------------------------------------------------
# level-manifold restriction
# ---------------------------------------------------------------------------

def restrict_form(form: DifferentialForm, coordinate: str, solution: Expr) -> DifferentialForm:
    """Substitute `coordinate` by `solution` in a form, replacing its
    differential accordingly; the result lives on the chart without it."""
    chart = form.chart
    red = chart.without(coordinate)
    binding = {coordinate: solution}
    if form.degree == 0:
        return DifferentialForm(red, 0, {(): substitute(form.components.get((), ZERO), binding)})
    dg = differential(solution, red)
    basis = {}
    for i, name in enumerate(chart.names):
        if name == coordinate:
            basis[i] = dg
        else:
            basis[i] = DifferentialForm(red, 1, {(red.index[name],): ONE})
    out = DifferentialForm(red, form.degree, {})
    for key, a in form.components.items():
        a2 = substitute(a, binding)
        if a2 == ZERO:
            continue
        term = wedge_all([basis[i] for i in key]).scaled(a2)
        out = out.plus(term)
    return out.map_coefficients(ratnorm)


def restrict_to_level(entity, integral_expr: Expr, constant: str,
                      chart: Chart | None = None,
                      policy: ZeroPolicy = DEFAULT_POLICY,
                      eliminate: str | None = None):
    """Solve integral_expr == constant for one chart coordinate and
    substitute it into `entity` (an Expr or a DifferentialForm).

    Coordinates are tried in reverse chart order unless `eliminate` names
    one.  Returns (restricted entity, Elimination) on success, or
    (entity, Constraint) when no coordinate is solvable."""
    if isinstance(entity, DifferentialForm):
        chart = entity.chart
    if chart is None:
        raise ChartError("restrict_to_level needs a chart for plain expressions")
    c = sym(constant)
    eq = add(integral_expr, neg(c))
    candidates = [eliminate] if eliminate else [n for n in reversed(chart.names)]
    for coord in candidates:
        if coord is None or coord not in eq.free_symbols:
            continue
        for sol in solve_for(eq, coord):
            if coord in sol.free_symbols:
                continue
            try:
                resid = ratnorm(substitute(eq, {coord: sol}))
            except (ArithmeticError, ValueError):
                continue
            if not zero_check(resid, policy).is_zero:
                continue
            elim = Elimination(constant, coord, sol)
            if isinstance(entity, DifferentialForm):
                return restrict_form(entity, coord, sol), elim
            return ratnorm(substitute(entity, {coord: sol})), elim
    return entity, Constraint(constant, eq)


# ---------------------------------------------------------------------------
# the cascade
# ---------------------------------------------------------------------------

def reduce(problem, structure: SolvableStructure,
           policy: ZeroPolicy = DEFAULT_POLICY) -> ReductionResult:
    """Integrate the coframe in order, restricting to the accumulated level
    manifolds, and assemble the implicit (and, when solvable, explicit)
    general solution."""
    if not structure.accepted:
        raise NonSymmetry("structure was not accepted by verify_structure")
    is_covering = isinstance(problem, CoveringSystem)
    n1 = len(structure.fields)
    eliminations: list = []
    constraints: list = []
    integrals: list = []
    notes: list = []
    forms = list(structure.omega)

    for level in range(n1, 0, -1):
        rho = forms[level - 1]
        # push through the accumulated eliminations
        for elim in eliminations:
            rho = restrict_form(rho, elim.coordinate, elim.solution)
        cname = "c%d" % level
        try:
            closed_tier = _closedness_tier(rho, constraints, policy)
            F = integrate_exact(rho, policy)
        except (NotClosed, RemainderInconsistency, ExprError) as exc:
            notes.append("cascade stopped at level %d: %s" % (level, exc))
            break
        ok, vtier = verify_potential(F, rho, policy)
        if not ok:
            raise RemainderInconsistency(
                "potential of omega_%d failed the exactness check" % level)
        fi = FirstIntegral(F, cname, level, rho, closed_tier, vtier,
                           contains_covering_variable="w" in F.free_symbols)
        integrals.append(fi)
        if level > 1:
            _entity, res = restrict_to_level(
                DifferentialForm(rho.chart, 0, {(): ZERO}), F, cname,
                chart=rho.chart, policy=policy)
            if isinstance(res, Elimination):
                eliminations.append(res)
            else:
                constraints.append(res)
                notes.append(
                    "level %d kept implicit; later closedness checked mod the ideal" % level)

    # constants ledger: on a covering, the level whose potential carries w is
    # inessential for the base equation
    constants = []
    implicit = []
    for fi in integrals:
        kind = "essential"
        if is_covering and fi.contains_covering_variable:
            kind = "inessential"
        constants.append((fi.constant, kind))
        if kind == "essential":
            implicit.append((fi.constant, fi.expr))

    explicit_raw: list = []
    explicit: list = []
    reabs: list = []
    if not integrals:
        return ReductionResult([], eliminations, constraints, [], [], [], [], [], notes)
    last = integrals[-1]
    final_chart_names = last.expr.free_symbols
    if last.omega_index != 1:
        notes.append("cascade incomplete; implicit relations cover levels %s"
                     % [fi.omega_index for fi in integrals])
    if "u" in final_chart_names and last.omega_index == 1:
        eq = add(last.expr, neg(sym(last.constant)))
        branches = []
        for sol in solve_for(eq, "u"):
            if "u" not in sol.free_symbols:
                branches.append(sol)
        if branches:
            explicit_raw = branches
            cnames = [c for c, _k in constants]
            for b in branches:
                nb, mapping = reabsorb_constants(b, cnames)
                explicit.append(nb)
                for item in mapping:
                    if item not in reabs:
                        reabs.append(item)
        else:
            notes.append("no explicit solution for u; implicit form returned")
    else:
        notes.append("u was eliminated during the cascade; implicit form returned")

    return ReductionResult(
        integrals=integrals,
        eliminations=eliminations,
        constraints=constraints,
        implicit=implicit,
        explicit_branches=explicit,
        explicit_raw=explicit_raw,
        constants=constants,
        reabsorptions=reabs,
        notes=notes,
    )


def _closedness_tier(rho: DifferentialForm, constraints, policy: ZeroPolicy) -> str:
    drho = exterior_derivative(rho).map_coefficients(ratnorm)
    tier = "symbolic"
    ok = True
    for e in drho.components.values():
        zc = zero_check(e, policy)
        if not zc.is_zero:
            ok = False
            break
        if zc.tier == "numeric":
            tier = "numeric"
    if ok:
        return tier
    if constraints:
        mod = drho
        for con in constraints:
            mod = wedge(mod, differential(con.expr, rho.chart))
        mod = mod.map_coefficients(ratnorm)
        if all(zero_check(e, policy).is_zero for e in mod.components.values()):
            return "mod-ideal"
    raise NotClosed("restricted form is not closed")


# ---------------------------------------------------------------------------
# constant re-absorption
# ---------------------------------------------------------------------------

def _constant_cluster(e: Expr, cnames: set) -> bool:
    free = e.free_symbols
    return bool(free) and free <= cnames


def _monotone_in_one(e: Expr, cnames: set) -> bool:
    """True if e is a monotone bijection of at least one constant it uses."""
    for c in sorted(e.free_symbols & cnames):
        coeffs = poly_coeffs_in(e, c)
        if coeffs is not None and len(coeffs) == 2 and not is_zero_poly(coeffs[1]):
            return True
        if isinstance(e, Call) and e.fn == "exp":
            inner = poly_coeffs_in(e.arg, c)
            if inner is not None and len(inner) == 2 and not is_zero_poly(inner[1]):
                return True
    return False


def _collect_clusters(e: Expr, cnames: set) -> list:
    """Maximal constant-only subvalues: factor groups in products, term
    groups in sums, constant parts of exp arguments, and bare constants."""
    found: dict = {}

    def note(p: Expr):
        if p.free_symbols & cnames:
            found.setdefault(p, 0)

    def walk(node: Expr):
        if not (node.free_symbols & cnames):
            return
        if isinstance(node, Sym):
            note(node)
            return
        if isinstance(node, Mul):
            cl = [f for f in node.factors if _constant_cluster(f, cnames)]
            if cl:
                note(mul(*cl))
            for f in node.factors:
                if not _constant_cluster(f, cnames):
                    walk(f)
            return
        if isinstance(node, Add):
            cl = [t for t in node.terms if _constant_cluster(t, cnames)]
            if cl:
                note(add(*cl))
            for t in node.terms:
                if not _constant_cluster(t, cnames):
                    walk(t)
            return
        if isinstance(node, Call):
            if node.fn == "exp":
                if _constant_cluster(node, cnames):
                    note(node)
                    return
                if isinstance(node.arg, Add):
                    cl = [t for t in node.arg.terms if _constant_cluster(t, cnames)]
                    if cl:
                        note(call("exp", add(*cl)))
            walk(node.arg)
            return
        if isinstance(node, Pow):
            walk(node.base)
            walk(node.exp)
            return
        if isinstance(node, Integral):
            walk(node.integrand)
            return

    walk(e)
    return sorted(found, key=lambda p: (-len(list(subexpressions(p))), p.sort_key()))


def _replace_cluster(e: Expr, P: Expr, s: Expr, cnames: set) -> Expr:
    """Replace every occurrence of the constant cluster P by the symbol s."""
    exp_part = P if isinstance(P, Call) and P.fn == "exp" else None

    def walk(node: Expr) -> Expr:
        if node == P:
            return s
        if not (node.free_symbols & P.free_symbols):
            return node
        if isinstance(node, Mul):
            cl = [f for f in node.factors if _constant_cluster(f, cnames)]
            rest = [f for f in node.factors if not _constant_cluster(f, cnames)]
            if cl and mul(*cl) == P:
                return mul(s, *[walk(f) for f in rest])
            return mul(*[walk(f) for f in node.factors])
        if isinstance(node, Add):
            cl = [t for t in node.terms if _constant_cluster(t, cnames)]
            rest = [t for t in node.terms if not _constant_cluster(t, cnames)]
            if cl and add(*cl) == P:
                return add(s, *[walk(t) for t in rest])
            return add(*[walk(t) for t in node.terms])
        if isinstance(node, Call):
            if node.fn == "exp" and exp_part is not None and isinstance(node.arg, Add):
                cl = [t for t in node.arg.terms if _constant_cluster(t, cnames)]
                rest = [t for t in node.arg.terms if not _constant_cluster(t, cnames)]
                if cl and call("exp", add(*cl)) == P:
                    return mul(s, call("exp", add(*[walk(t) for t in rest])))
            return call(node.fn, walk(node.arg))
        if isinstance(node, Pow):
            return power(walk(node.base), walk(node.exp))
        if isinstance(node, Integral):
            return integral(walk(node.integrand), node.var)
        return node

    return walk(e)


def reabsorb_constants(e: Expr, constant_names, prefix: str = "C"):
    """Collapse constant-only clusters into fresh constants C1, C2, ...

    A cluster may absorb a constant only when it is a monotone rewrite of
    that constant and replacing the cluster removes the constant from the
    whole expression, so the constant count never grows.  Survivors are
    renamed for uniformity.  Returns (expression, [(old, new name), ...])."""
    cnames = set(constant_names)
    order: list = []
    counter = [0]

    def fresh():
        counter[0] += 1
        return "%s%d" % (prefix, counter[0])

    changed = True
    while changed and (e.free_symbols & cnames):
        changed = False
        for P in _collect_clusters(e, cnames):
            if isinstance(P, Sym):
                continue
            used = sorted(P.free_symbols & cnames)
            if not _monotone_in_one(P, cnames):
                continue
            name = fresh()
            trial = _replace_cluster(e, P, sym(name), cnames)
            gone = [c for c in used if c not in trial.free_symbols]
            if gone:
                e = trial
                order.append((P, name))
                cnames.add(name)
                changed = True
                break
            counter[0] -= 1
    for c in sorted(e.free_symbols & set(constant_names)):
        name = fresh()
        e = substitute(e, {c: sym(name)})
        order.append((sym(c), name))
    return e, order


# ---------------------------------------------------------------------------
# one-step partial reduction
# ---------------------------------------------------------------------------

@dataclass
class PfaffianReduction:
    surviving: list                 # normalized forms omega_2, ...
    invariant_expressions: list     # matching forms in d(invariants), or None
    notes: list


def partial_reduce(problem, Y1: VectorField, frame,
                   invariants=None,
                   policy: ZeroPolicy = DEFAULT_POLICY) -> PfaffianReduction:
    """Quotient by one symmetry: build the coframe from [Y1] + frame and drop
    omega_1; the surviving forms generate the reduced Pfaffian system.

    When `invariants` (functions annihilated by Y1) are supplied, each
    surviving form is re-expressed in their differentials where possible."""
    from .symmetry import is_symmetry_of_distribution

    if isinstance(problem, CoveringSystem):
        from .covering import covering_total_derivative

        Z = covering_total_derivative(problem)
    else:
        Z = total_derivative_field(problem)
    ok, _tier, _res = is_symmetry_of_distribution(Y1, [Z], policy)
    if not ok:
        raise NonSymmetry("the first field is not a symmetry of the flow")
    fields = [Y1] + list(frame)
    Omega = volume_form(Z.chart)
    _raw, normalized, _signs = omega_forms(Z, fields, Omega)
    surviving = normalized[1:]
    notes: list = []
    expressed = None
    if invariants:
        invariants = [parse(g) if isinstance(g, str) else g for g in invariants]
        for g in invariants:
            r = ratnorm(Y1.apply(g))
            if not zero_check(r, policy).is_zero:
                raise NonSymmetry("supplied function %s is not an invariant" % to_str(g))
        expressed = []
        basis = [differential(g, Z.chart) for g in invariants]
        for w in surviving:
            coeffs = _express_in_basis(w, basis, policy)
            expressed.append(coeffs)
            if coeffs is None:
                notes.append("a surviving form is not spanned by the invariant differentials")
    return PfaffianReduction(surviving, expressed, notes)


def _express_in_basis(w: DifferentialForm, basis, policy: ZeroPolicy):
    """Solve w = sum_i A_i * basis_i componentwise; returns [A_i] or None."""
    chart = w.chart
    rows = []
    rhs = []
    for i in range(chart.dim):
        rows.append([b.components.get((i,), ZERO) for b in basis])
        rhs.append(w.components.get((i,), ZERO))
    from .symbolic.antideriv import _solve_linear_system

    sol = _solve_linear_system(rows, rhs)
    if sol is None:
        return None
    resid = w
    for a, b in zip(sol, basis):
        resid = resid.minus(b.scaled(a))
    resid = resid.map_coefficients(ratnorm)
    for e in resid.components.values():
        if not zero_check(e, policy).is_zero:
            return None
    return [ratnorm(a) for a in sol]
