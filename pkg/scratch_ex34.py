import sys, time
sys.path.insert(0, 'src')
from solvstruct.geometry import OdeProblem, VectorField
from solvstruct.covering import CoveringSystem, covering_total_derivative, nonlocal_symmetry_field, is_nonlocal_symmetry
from solvstruct.structure import verify_structure, determining_residuals
from solvstruct.reduction import reduce
from solvstruct.symbolic.parser import parse
from solvstruct.symbolic.printer import to_str
from solvstruct.symbolic.ratnorm import ratnorm, is_zero_poly
from solvstruct.symbolic.zero import zero_check

t0 = time.time()

print('=== Example 3 with corrected Y3 ===')
ode3 = OdeProblem(2, 'u1/((1 + x)*x) - (x^2 + x^3)/(4*(1 + x)*u^3) - x/(2*(1 + x)*u)')
cov3 = CoveringSystem(ode3, 'x/u^2')
Dt3 = covering_total_derivative(cov3)
Y3f = nonlocal_symmetry_field('u*exp(w)', '-2*exp(w)', cov3)
dw3 = VectorField(cov3.chart, {'w': '1'})
cand3 = VectorField(cov3.chart, {'u1': '(1 + x)*(x + 2*u*u1)^2/(4*x*u^3)'})
gamma = parse('2*x*u^2/((1 + x)*(2*u*u1 + x)) - x + ln(1 + x)')
print('Z(gamma)=0:', is_zero_poly(ratnorm(Dt3.apply(gamma))),
      'Y(gamma)=0:', is_zero_poly(ratnorm(Y3f.field.apply(gamma))))
res = determining_residuals([Dt3, Y3f.field, dw3], cand3)
print('cand residuals zero:', all(zero_check(e).is_zero for r in res for e in r.components.values()))
S3 = verify_structure(Dt3, [Y3f.field, dw3, cand3])
print('structure accepted:', S3.accepted,
      'ladder:', [(c.index, c.closed, c.closed_mod_later) for c in S3.report.ladder],
      't=%.1fs' % (time.time() - t0))
S3b = verify_structure(Dt3, [Y3f.field, cand3, dw3])
print('swapped order accepted:', S3b.accepted,
      'ladder:', [(c.index, c.closed) for c in S3b.report.ladder])
r3 = reduce(cov3, S3)
for fi in r3.integrals:
    print('  I_%d (%s, closed=%s, dI=%s):' % (fi.omega_index, fi.constant,
          fi.closedness_tier, fi.verified_tier), to_str(fi.expr)[:150])
print('  constants:', r3.constants)
for b in r3.explicit_branches:
    print('  explicit:', to_str(b)[:240])
print('  notes:', r3.notes, 't=%.1fs' % (time.time() - t0))

print('=== Example 4 with corrected phi1 ===')
ode4 = OdeProblem(2, '(x*u1 - x*u^2 + u^2)*exp(-1/u) + 2*u1^2/u + u1')
cov4 = CoveringSystem(ode4, 'x*exp(-1/u) - 1/x')
Dt4 = covering_total_derivative(cov4)
Y4f = nonlocal_symmetry_field('x*u^2*exp(w)', 'x*exp(w)', cov4)
print('Y4 nonlocal symmetry:', is_nonlocal_symmetry(Y4f, cov4).accepted)
dw4 = VectorField(cov4.chart, {'w': '1'})
cand4 = VectorField(cov4.chart, {'u1': 'u^2*exp(x)'})
res4 = determining_residuals([Dt4, Y4f.field, dw4], cand4)
print('cand residuals zero:', all(zero_check(e).is_zero for r in res4 for e in r.components.values()))
S4 = verify_structure(Dt4, [Y4f.field, dw4, cand4])
print('structure accepted:', S4.accepted,
      'ladder:', [(c.index, c.closed, c.closed_mod_later) for c in S4.report.ladder])
S4p = verify_structure(Dt4, [Y4f.field, cand4, dw4])
print('permuted accepted:', S4p.accepted, 'failure level:', S4p.report.failure_level,
      'ladder:', [(c.index, c.closed) for c in S4p.report.ladder])
r4 = reduce(cov4, S4)
for fi in r4.integrals:
    print('  I_%d (%s, closed=%s, dI=%s):' % (fi.omega_index, fi.constant,
          fi.closedness_tier, fi.verified_tier), to_str(fi.expr)[:150])
print('  constants:', r4.constants)
for b in r4.explicit_branches:
    print('  explicit:', to_str(b)[:240])
print('  notes:', r4.notes, 't=%.1fs' % (time.time() - t0))
