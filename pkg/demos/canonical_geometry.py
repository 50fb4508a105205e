"""The canonical problem: Power(2), s = 1/2, g = 1.5 |t|^0.5 sign(t) on (0, 1).

The right-hand side grows more slowly than M at zero, so the energy is
negative very close to the origin in every direction.  The sphere of radius
rho does carry positive energy, but the global minimizer lies inside it, so
the sphere separates nothing and there is no mountain pass between 0 and u1.

Run with ``python demos/canonical_geometry.py``.
"""

import numpy as np

from orlisov import (
    Domain, Nonlinearity, QuadratureScheme, WeakFormContext, YoungFunction, energy, fixture, seminorm_gagliardo,
)
from orlisov.solver import minimize, provisional_geometry, ring_positivity

ctx = WeakFormContext(YoungFunction.power(2.0), 0.5, Domain.interval(0.0, 1.0, 32), QuadratureScheme(3, 6, 8))
nl = Nonlinearity.pure_power(1.5)

prov = provisional_geometry(ctx, nl)
geo = prov.geometry
lam = min(0.5 * geo.lambda_star, 0.1)
print(f"rho = {geo.rho:.4g}, lambda* = {geo.lambda_star:.4g}, lambda = {lam:.4g}")
print(f"alpha (threshold formula) = {geo.alpha:.4g}, level the sphere estimate supports = {geo.alpha_lower:.4g}")

probe = ring_positivity(ctx, nl, lam, geo.rho, 50)
print(f"min energy on the sphere |u| = rho: {probe.min_energy:.4g}")
print("  >= alpha/2 ?", probe.min_energy >= 0.5 * geo.alpha)
print("  >= corrected level ?", probe.min_energy >= geo.alpha_lower)

res = minimize(ctx, nl, lam)
print(f"\nminimizer: I = {res.energy.total:.4g}, residual = {res.residual:.2g}, max u = {res.u.values.max():.4g}")
print(f"  [u1] = {seminorm_gagliardo(ctx.M, res.u, 0.5).norm:.4g}  (inside the sphere of radius rho)")

# along the ray t * bubble the sign changes once: one critical point, the minimum
b = fixture("bubble", ctx.domain)
for t in np.geomspace(1e-8, 1e-2, 7):
    print(f"  I({t:.0e} * bubble) = {energy(ctx, nl, lam, t * b).total:+.3e}")
