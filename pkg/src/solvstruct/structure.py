"""Solvable structures for the flow distribution of an ODE or covering.

Given a frame Z, Y_1, ..., Y_{n-1} on an n-dimensional chart, the full
contraction of all fields into the volume form gives the scalar Delta, and
omitting Y_i gives (after division by Delta) the dual coframe omega_i with
Y_i _| omega_j = +/- delta_ij and Z _| omega_j = 0.  The ordered fields form
a solvable structure iff Delta does not vanish and, level by level, each
Y_{s+1} is a symmetry of the span of Z, Y_1, ..., Y_s; then the coframe is
successively closed: d(omega_{n-1}) = 0 and d(omega_i) wedges to zero
against the later ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

from .geometry import (
    DifferentialForm, VectorField,
    contract_fields, exterior_derivative, lie_bracket, scalar_of, volume_form,
    wedge, wedge_all,
)
from .symbolic.expr import Expr, ONE, ZERO, add, const, mul, neg, power
from .symbolic.ratnorm import fraction_parts, is_zero_poly, ratnorm
from .symbolic.zero import DEFAULT_POLICY, ZeroPolicy, zero_check


class DegenerateStructure(ValueError):
    pass


class DependentChain(ValueError):
    pass


def delta(Z: VectorField, Ys, Omega: DifferentialForm) -> Expr:
    """Full contraction Y_1 _| ... _| Y_{n-1} _| Z _| Omega."""
    Ys = list(Ys)
    if len(Ys) != Z.chart.dim - 1:
        raise ValueError("need dim-1 fields, got %d on %r" % (len(Ys), Z.chart.names))
    return ratnorm(scalar_of(contract_fields(Ys + [Z], Omega)))


def singular_loci(e: Expr):
    """Structural factors whose zero sets bound the domain of validity."""
    num, factors = fraction_parts(e)
    loci = [f for f, _m in factors]
    nn, nf = fraction_parts(num)
    if isinstance(num, Expr) and not is_zero_poly(num):
        loci.extend(f for f, _m in nf)
    return loci


def omega_forms(Z: VectorField, Ys, Omega: DifferentialForm):
    """Raw and duality-normalized coframe 1-forms.

    Returns (raw, normalized, signs): raw_i omits Y_i from the contraction
    and divides by Delta; normalized_i is sign-fixed so Y_i _| omega_i = +1."""
    Ys = list(Ys)
    d = delta(Z, Ys, Omega)
    if is_zero_poly(d):
        raise DegenerateStructure("the full contraction vanishes identically")
    inv = power(d, const(-1))
    raw = []
    normalized = []
    signs = []
    for i in range(len(Ys)):
        rest = Ys[:i] + Ys[i + 1:]
        w = contract_fields(rest + [Z], Omega).scaled(inv).map_coefficients(ratnorm)
        pairing = ratnorm(scalar_of(contract_fields([Ys[i]], w)))
        if is_zero_poly(add(pairing, neg(ONE))):
            sign = 1
        elif is_zero_poly(add(pairing, ONE)):
            sign = -1
        else:
            raise DegenerateStructure(
                "duality pairing of omega_%d is %r, expected +-1" % (i + 1, pairing))
        raw.append(w)
        normalized.append(w if sign == 1 else w.scaled(const(-1)))
        signs.append(sign)
    return raw, normalized, signs


def determining_residuals(chain, candidate: VectorField,
                          Omega: DifferentialForm | None = None,
                          policy: ZeroPolicy = DEFAULT_POLICY):
    """Residual forms for extending `chain` (= [Z, Y_1, ..., Y_s]) by the
    candidate field: contractions of L_candidate(Y_j) into the chain's
    insertion of the volume form, for each j.  Empty residuals extend."""
    chain = list(chain)
    if not chain:
        raise ValueError("empty chain")
    chart = candidate.chart
    if Omega is None:
        Omega = volume_form(chart)
    inner = contract_fields(chain, Omega).map_coefficients(ratnorm)
    if all(zero_check(e, policy).is_zero for e in inner.components.values()):
        raise DependentChain("chain fields are dependent (inserted volume vanishes)")
    out = []
    for Yj in chain:
        L = lie_bracket(candidate, Yj)
        out.append(contract_fields([L], inner).map_coefficients(ratnorm))
    return out


def count_determining_equations(k: int) -> int:
    """Closed-form count 1 - 2^(k+1) + (k+1)*2^k of the level equations."""
    if k < 1:
        raise ValueError("order must be >= 1")
    return 1 - 2 ** (k + 1) + (k + 1) * 2 ** k


def count_determining_equations_sum(k: int) -> int:
    """The same count as the explicit sum over levels."""
    return sum((s + 1) * comb(k + 1, s + 2) for s in range(k))


@dataclass
class LevelCheck:
    level: int
    residual_tiers: list
    passed: bool


@dataclass
class ClosednessCheck:
    index: int          # 1-based omega index
    closed: bool        # d(omega_i) == 0 outright
    closed_mod_later: bool
    tier: str


@dataclass
class StructureReport:
    delta_nonzero: bool
    delta_loci: list
    levels: list
    ladder: list
    accepted: bool
    failure_level: int | None = None
    notes: list = field(default_factory=list)

    def closed_indices(self):
        return [c.index for c in self.ladder if c.closed]


@dataclass
class SolvableStructure:
    Z: VectorField
    fields: list
    delta: Expr
    omega_raw: list
    omega: list
    omega_signs: list
    report: StructureReport

    @property
    def accepted(self) -> bool:
        return self.report.accepted


def verify_structure(Z: VectorField, Ys, Omega: DifferentialForm | None = None,
                     policy: ZeroPolicy = DEFAULT_POLICY) -> SolvableStructure:
    """Run the nonvanishing condition, the level-by-level determining
    residuals, and the closedness ladder of the coframe."""
    Ys = list(Ys)
    chart = Z.chart
    if Omega is None:
        Omega = volume_form(chart)
    d = delta(Z, Ys, Omega)
    d_zero = zero_check(d, policy)
    report = StructureReport(
        delta_nonzero=not d_zero.is_zero,
        delta_loci=singular_loci(d) if not d_zero.is_zero else [],
        levels=[], ladder=[], accepted=True)
    if d_zero.is_zero:
        report.accepted = False
        report.notes.append("full contraction vanishes identically")
        return SolvableStructure(Z, Ys, d, [], [], [], report)
    ok = True
    failure = None
    for s in range(len(Ys)):
        chain = [Z] + Ys[:s]
        try:
            residuals = determining_residuals(chain, Ys[s], Omega, policy)
        except DependentChain as exc:
            report.notes.append("level %d: %s" % (s, exc))
            ok = False
            failure = s
            report.levels.append(LevelCheck(s, [], False))
            break
        tiers = []
        passed = True
        for r in residuals:
            worst = "symbolic"
            for e in r.components.values():
                zc = zero_check(e, policy)
                if not zc.is_zero:
                    passed = False
                    worst = zc.tier
                    break
                if zc.tier == "numeric":
                    worst = "numeric"
            tiers.append(worst)
            if not passed:
                break
        report.levels.append(LevelCheck(s, tiers, passed))
        if not passed:
            ok = False
            failure = s
            break
    raw, normalized, signs = omega_forms(Z, Ys, Omega)
    n1 = len(Ys)
    for i in range(n1, 0, -1):
        w = raw[i - 1]
        dw = exterior_derivative(w).map_coefficients(ratnorm)
        closed, tier = _form_zero(dw, policy)
        if i == n1:
            mod_later = closed
        else:
            modform = wedge_all([dw] + raw[i:]).map_coefficients(ratnorm)
            mod_later, tier2 = _form_zero(modform, policy)
            if not closed:
                tier = tier2
        report.ladder.append(ClosednessCheck(i, closed, mod_later, tier))
    report.ladder.sort(key=lambda c: c.index)
    if ok:
        for c in report.ladder:
            if not c.closed_mod_later:
                ok = False
                failure = c.index
                report.notes.append(
                    "omega_%d fails closedness modulo the later forms" % c.index)
                break
    report.accepted = ok
    report.failure_level = failure
    return SolvableStructure(Z, Ys, d, raw, normalized, signs, report)


def _form_zero(formv: DifferentialForm, policy: ZeroPolicy):
    tier = "symbolic"
    for e in formv.components.values():
        zc = zero_check(e, policy)
        if not zc.is_zero:
            return False, zc.tier
        if zc.tier == "numeric":
            tier = "numeric"
    return True, tier


# ---------------------------------------------------------------------------
# completion by joint invariants
# ---------------------------------------------------------------------------

def _matrix_inverse(rows):
    """Inverse of a small symbolic matrix by Gauss-Jordan; None if singular."""
    n = len(rows)
    aug = [list(r) + [ONE if i == j else ZERO for j in range(n)]
           for i, r in enumerate(rows)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not is_zero_poly(ratnorm(aug[r][col])):
                piv = r
                break
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = power(aug[col][col], const(-1))
        aug[col] = [ratnorm(mul(x, inv)) for x in aug[col]]
        for r in range(n):
            if r != col and not is_zero_poly(ratnorm(aug[r][col])):
                f = aug[r][col]
                aug[r] = [ratnorm(add(x, neg(mul(f, y))))
                          for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


class InvarianceError(ValueError):
    pass


def structure_from_invariants(Z: VectorField, chain, invariants, complements,
                              Omega: DifferentialForm | None = None,
                              policy: ZeroPolicy = DEFAULT_POLICY) -> SolvableStructure:
    """Complete a partial chain to a full structure with the coordinate
    fields of joint invariants.

    `invariants` must be annihilated by Z and by every chain field;
    `complements` are extra functions making (invariants + complements) a
    chart, in that order.  The coordinate fields of the invariant directions
    are obtained by inverting the Jacobian."""
    from .symbolic.expr import diff

    chain = list(chain)
    invariants = [i for i in invariants]
    complements = [c for c in complements]
    chart = Z.chart
    for g in invariants:
        zg = ratnorm(Z.apply(g))
        if not zero_check(zg, policy).is_zero:
            raise InvarianceError("Z does not annihilate %r" % g)
        for Y in chain:
            yg = ratnorm(Y.apply(g))
            if not zero_check(yg, policy).is_zero:
                raise InvarianceError("a chain field does not annihilate %r" % g)
    funcs = invariants + complements
    if len(funcs) != chart.dim:
        raise InvarianceError(
            "need %d chart functions, got %d" % (chart.dim, len(funcs)))
    jac = [[ratnorm(diff(g, name)) for name in chart.names] for g in funcs]
    inv = _matrix_inverse(jac)
    if inv is None:
        raise InvarianceError("the invariants and complements do not form a chart")
    new_fields = []
    for i in range(len(invariants)):
        comps = {}
        for r, name in enumerate(chart.names):
            comps[name] = inv[r][i]
        new_fields.append(VectorField(chart, comps))
    return verify_structure(Z, chain + new_fields, Omega, policy)
