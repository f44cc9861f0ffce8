import sys, time
sys.path.insert(0, 'src')
from solvstruct.geometry import (OdeProblem, VectorField, total_derivative_field,
                                 contract_fields, lie_bracket, volume_form)
from solvstruct.covering import CoveringSystem, covering_total_derivative, nonlocal_symmetry_field
from solvstruct.structure import determining_residuals, verify_structure
from solvstruct.symbolic.parser import parse
from solvstruct.symbolic.printer import to_str
from solvstruct.symbolic.expr import sym, add, neg, mul, power, const, substitute, diff
from solvstruct.symbolic.ratnorm import ratnorm, is_zero_poly
from solvstruct.symbolic.solve import solve_for
from solvstruct.symbolic.zero import zero_check

ode = OdeProblem(2, 'u1/((1 + x)*x) - (x^2 + x^3)/(4*(1 + x)*u^3) - x/(2*(1 + x)*u)')
cov = CoveringSystem(ode, 'x/u^2')
Dt = covering_total_derivative(cov)
Y = nonlocal_symmetry_field('u*exp(w)', '-2*exp(w)', cov)
dw = VectorField(cov.chart, {'w': '1'})

# zeta is invariant under Y (same Y as example 2)
zeta = parse('(2*u*u1 + x)/(2*u^2)')
print('Y(zeta) == 0:', is_zero_poly(ratnorm(Y.field.apply(zeta))))
Zz = ratnorm(Dt.apply(zeta))
print('Z(zeta) =', to_str(Zz))
# express in (x, zeta): substitute u1 = (2 u^2 zeta - x)/(2u)
z = sym('z')
u1_of = solve_for(add(zeta, neg(z)), 'u1')[0]
expr = ratnorm(substitute(Zz, {'u1': u1_of}))
print('Z(zeta) in (x,z,u):', to_str(expr))
print('free of u:', 'u' not in expr.free_symbols)
