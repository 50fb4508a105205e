"""Young functions, their indices and conjugates, and the norms they induce.

Run with ``python demos/young_and_norms.py``.
"""

import numpy as np

from orlisov import (
    Domain, YoungFunction, conjugate, fixture, growth_indices, modular_gagliardo, norm_LM,
    seminorm_gagliardo,
)
from orlisov.young import audit_S_condition, audit_young_inequality

families = {
    "t^3": YoungFunction.power(3.0),
    "t^2 + t^4": YoungFunction.power_sum(2.0, 4.0),
    "(1+t^2)^1.5 - 1": YoungFunction.bump_power(1.5),
}

print("growth indices: closed form vs sampled")
for label, M in families.items():
    sampled = growth_indices(M, method="sample")
    print(f"  {label:16s} {M.closed_form_indices()}  ->  ({sampled.m0:.6f}, {sampled.m_sup:.6f})")

# The conjugate is built numerically from the inverse density; Young's
# inequality is tight exactly on the graph t = m(s).
M = families["t^2 + t^4"]
Mbar = conjugate(M)
s = 0.8
t = float(M.m(s))
print(f"\nYoung at t = m(s): s t = {s * t:.10f}, M(s) + Mbar(t) = {float(M.M(s) + Mbar.M(t)):.10f}")
print("Young inequality audit:", audit_young_inequality(M, n=2000).passed)
print("(S) audit for t^1.5 (fails, M(sqrt t) is concave):", audit_S_condition(YoungFunction.power(1.5)).passed)

# Norms of one function under different Young functions.
dom = Domain.interval(0.0, 1.0, 32)
u = fixture("bubble", dom)
print("\nbubble on 32 cells, s = 0.5")
for label, M in families.items():
    F = modular_gagliardo(M, u, 0.5)
    print(f"  {label:16s} |u|_LM = {norm_LM(M, u).norm:.6f}   [u] = {seminorm_gagliardo(M, u, 0.5).norm:.6f}"
          f"   F(u) = {F.value:.6f} (exterior {F.tail_contribution:.4f})")

# For a power the Luxemburg seminorm is just the p-th root of the modular.
P = YoungFunction.power(3.0)
for c in (0.1, 1.0, 10.0):
    F = modular_gagliardo(P, c * u, 0.5).value
    print(f"  c = {c:5.1f}: [cu] = {seminorm_gagliardo(P, c * u, 0.5).norm:.10f}, F^(1/3) = {np.cbrt(F):.10f}")
