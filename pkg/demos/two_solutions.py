"""Two solutions when G grows faster than M at zero.

With G(t) = t^4 / (1 + t^2)^(5/4), quartic near 0 and of order |t|^1.5 at
infinity, the energy has a positive barrier around the origin and a negative
global minimum for large lambda, so the mountain pass produces a second,
saddle-type critical point.

Run with ``python demos/two_solutions.py [out.csv]``.
"""

import sys

from orlisov import Domain, Nonlinearity, WeakFormContext, YoungFunction, minimize, mountain_pass, write_csv


def G(x, t):
    return t ** 4 / (1 + t * t) ** 1.25


def g(x, t):
    return t ** 3 * (4 + 1.5 * t * t) / (1 + t * t) ** 2.25


nl = Nonlinearity.custom(g, G, 1.5, C0=4.0, C1=1e-300, C2=1.0, name="quartic_bump")
ctx = WeakFormContext(YoungFunction.power(2.0), 0.5, Domain.interval(0.0, 1.0, 32))
lam = 100.0

u1, I1 = minimize(ctx, nl, lam)
print(f"global minimizer: I = {I1.total:.4f}, max u = {u1.values.max():.4f}")

mp = mountain_pass(ctx, nl, lam, u1)
print(f"mountain pass: status {mp.status}, I = {mp.energy.total:.4f}, residual {mp.residual:.2e}")
print(f"  lowest Hessian eigenvalue {mp.lowest_eigenvalue:.4f} (negative: a saddle)")
print(f"  max u2 = {mp.u.values.max():.4f}")

if len(sys.argv) > 1:
    write_csv(mp.u, sys.argv[1])
    print("wrote", sys.argv[1])
