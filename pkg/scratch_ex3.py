import sys, random, time
sys.path.insert(0, 'src')
import numpy as np
from fractions import Fraction
from solvstruct.geometry import (OdeProblem, VectorField, contract_fields,
                                 lie_bracket, volume_form)
from solvstruct.covering import CoveringSystem, covering_total_derivative, nonlocal_symmetry_field
from solvstruct.symbolic.parser import parse
from solvstruct.symbolic.printer import to_str
from solvstruct.symbolic.expr import mul, power, const, sym, add
from solvstruct.symbolic.numeric import eval_numeric, DomainError
from solvstruct.symbolic.ratnorm import ratnorm, is_zero_poly
from solvstruct.symbolic.zero import zero_check

t0 = time.time()
ode = OdeProblem(2, 'u1/((1 + x)*x) - (x^2 + x^3)/(4*(1 + x)*u^3) - x/(2*(1 + x)*u)')
cov = CoveringSystem(ode, 'x/u^2')
Dt = covering_total_derivative(cov)
Y = nonlocal_symmetry_field('u*exp(w)', '-2*exp(w)', cov)
dw = VectorField(cov.chart, {'w': '1'})
chain = [Dt, Y.field, dw]
Om = volume_form(cov.chart)
inner = contract_fields(chain, Om)

x, u, u1 = sym('x'), sym('u'), sym('u1')
denA = parse('8*u1*(x + u*u1)')
denB = parse('4*u^2*(x + u*u1)')

basis = []
deg = 5
for i in range(deg + 1):
    for j in range(deg + 1 - i):
        for k in range(deg + 1 - i - j):
            basis.append((i, j, k, mul(power(x, const(i)), power(u, const(j)), power(u1, const(k)))))
nb = len(basis)

rng = random.Random(3)
pts = [{'x': rng.uniform(0.6, 1.4), 'u': rng.uniform(0.6, 1.4),
        'u1': rng.uniform(0.6, 1.4), 'w': rng.uniform(-0.3, 0.3)} for _ in range(40)]


def residual_column(T):
    col = []
    for Yj in chain:
        L = lie_bracket(T, Yj)
        r = contract_fields([L], inner)
        c = r.components.get((), None)
        for pt in pts:
            col.append(0.0 if c is None else eval_numeric(c, pt))
    return col


cols = []
labels = []
for comp, den in (('u', denA), ('w', denB)):
    inv = power(den, const(-1))
    for i, j, k, b in basis:
        T = VectorField(cov.chart, {comp: mul(b, inv)})
        cols.append(residual_column(T))
        labels.append((comp, i, j, k))
print('columns built: %d  t=%.1fs' % (len(cols), time.time() - t0))
A = np.array(cols).T
U, s, vt = np.linalg.svd(A)
print('singular value range', s[0], s[-8:])
null = vt[s < 1e-8 * s[0]]
print('nullspace dim', null.shape[0])

# compare with the printed candidate: project it
P0 = parse('(1 + x)*(x + 2*u*u1)^2/8')  # times 1/(u1(x+uu1)) is the printed a2... numerator/8
# printed a2 = (1+x)(x+2uu1)^2 / (8 u1 (x+uu1)) -> numerator coeffs over basis (deg 5)
for vec in null:
    vec = vec / vec[np.argmax(np.abs(vec))]
    terms = [(labels[i], round(float(c), 6)) for i, c in enumerate(vec) if abs(c) > 1e-7]
    if len(terms) <= 24:
        print(len(terms), terms)
print('t=%.1fs' % (time.time() - t0))
