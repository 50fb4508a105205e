"""Property checks on discrete functions, each returning an :class:`AuditReport`.

Margins are signed so that ``worst_margin >= 0`` exactly when the property
held on every sample.  The same routines back the ``verify`` subcommand.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Domain, GridFunction, random_unit_direction
from .modular import modular_gagliardo, norm_LM, poincare_estimate, seminorm_gagliardo
from .operator import WeakFormContext, apply_weak, gradient_F, modular_F, monotonicity_probe
from .problem import Nonlinearity, energy, energy_gradient
from .young import AuditReport, YoungFunction

__all__ = [
    "unit_directions", "check_luxemburg", "check_lemma2", "check_norm_axioms",
    "check_directional_derivative", "check_energy_gradient", "check_monotonicity",
    "check_convexity_inequality", "check_poincare",
]


def unit_directions(ctx: WeakFormContext, n: int, seed: int = 0) -> list[GridFunction]:
    """``n`` random conforming functions of unit seminorm (seeds ``seed .. seed+n-1``)."""
    return [random_unit_direction(ctx.domain, seed + k, ctx.M, ctx.s, ctx.scheme, ctx.scope)
            for k in range(n)]


def check_luxemburg(ctx: WeakFormContext, n: int = 20, seed: int = 0, tol: float = 1e-10) -> AuditReport:
    """Modular at the Luxemburg norm equals 1 for both norms."""
    worst = 0.0
    for k, v in enumerate(unit_directions(ctx, n, seed)):
        u = (0.5 + k) * v
        for lux in (norm_LM(ctx.M, u, ctx.scheme),
                    seminorm_gagliardo(ctx.M, u, ctx.s, ctx.scope, ctx.scheme)):
            worst = max(worst, abs(lux.modular_at_norm - 1))
    return AuditReport("luxemburg", worst <= tol, tol - worst, 2 * n)


def check_lemma2(ctx: WeakFormContext, n: int = 100, seed: int = 0, rtol: float = 1e-8,
                 indices: tuple[float, float] | None = None) -> list[AuditReport]:
    """Modular/seminorm sandwich on ``n`` functions with ``[u]`` spread over ``[0.1, 10]``.

    (i) ``F(u / [u]) = 1``; (ii) ``[u]^m0 <= F(u) <= [u]^m_sup`` when
    ``[u] > 1``; (iii) the reversed powers when ``[u] < 1``.
    """
    m0, m1 = indices if indices is not None else (ctx.M.m0, ctx.M.m_sup)
    scales = np.geomspace(0.1, 10.0, n)
    w1 = w2 = w3 = math.inf
    n2 = n3 = 0
    for r, v in zip(scales, unit_directions(ctx, n, seed)):
        u = r * v
        sn = seminorm_gagliardo(ctx.M, u, ctx.s, ctx.scope, ctx.scheme).norm
        F = modular_gagliardo(ctx.M, u, ctx.s, ctx.scope, ctx.scheme).value
        Fn = modular_F(ctx, u / sn)
        w1 = min(w1, 1e-9 - abs(Fn - 1))
        lo, hi = (sn ** m0, sn ** m1) if sn > 1 else (sn ** m1, sn ** m0)
        margin = min(F - lo * (1 - rtol), hi * (1 + rtol) - F) / max(F, 1e-300)
        if sn > 1:
            w2, n2 = min(w2, margin), n2 + 1
        elif sn < 1:
            w3, n3 = min(w3, margin), n3 + 1
    out = [AuditReport("lemma2_i", w1 >= 0, w1, n)]
    out.append(AuditReport("lemma2_ii", w2 >= 0, w2 if n2 else 0.0, n2))
    out.append(AuditReport("lemma2_iii", w3 >= 0, w3 if n3 else 0.0, n3))
    return out


def check_norm_axioms(ctx: WeakFormContext, n: int = 20, seed: int = 0, rtol: float = 1e-8) -> AuditReport:
    """Absolute homogeneity and the triangle inequality of the seminorm on random triples."""
    vs = unit_directions(ctx, 3 * n, seed)

    def sn(u):
        return seminorm_gagliardo(ctx.M, u, ctx.s, ctx.scope, ctx.scheme).norm

    worst = math.inf
    for k in range(n):
        a, b = vs[3 * k], (1.0 + k) * vs[3 * k + 1]
        c = -2.5 + 0.3 * k
        na, nb = sn(a), sn(b)
        worst = min(worst, rtol - abs(sn(c * a) - abs(c) * na) / (abs(c) * na))
        worst = min(worst, (na + nb) * (1 + rtol) - sn(a + b))
    return AuditReport("norm_axioms", worst >= 0, worst, 2 * n)


def check_directional_derivative(ctx: WeakFormContext, n: int = 20, seed: int = 0, h: float = 1e-5,
                                 tol: float = 1e-6) -> AuditReport:
    """``<F'(u), v>`` against central differences of ``F``, relative to ``1 + |<F'(u), v>|``."""
    vs = unit_directions(ctx, 2 * n, seed)
    worst = 0.0
    for k in range(n):
        u, v = vs[2 * k], vs[2 * k + 1]
        exact = apply_weak(ctx, u, v)
        fd = (modular_F(ctx, u + h * v) - modular_F(ctx, u - h * v)) / (2 * h)
        worst = max(worst, abs(exact - fd) / (1 + abs(exact)))
    return AuditReport("gradient_fd", worst < tol, tol - worst, n, {"h": h})


def check_energy_gradient(ctx: WeakFormContext, nl: Nonlinearity, lam: float, n: int = 20, seed: int = 0,
                          h: float = 1e-5, tol: float = 1e-6) -> AuditReport:
    """``<I'(u), v>`` from :func:`energy_gradient` against central differences of the energy."""
    vs = unit_directions(ctx, 2 * n, seed)
    worst = 0.0
    for k in range(n):
        u, v = vs[2 * k], vs[2 * k + 1]
        exact = float(energy_gradient(ctx, nl, lam, u) @ v.interior)
        fd = (energy(ctx, nl, lam, u + h * v).total - energy(ctx, nl, lam, u - h * v).total) / (2 * h)
        worst = max(worst, abs(exact - fd) / (1 + abs(exact)))
    return AuditReport("energy_gradient_fd", worst < tol, tol - worst, n, {"h": h})


def check_monotonicity(ctx: WeakFormContext, n: int = 100, seed: int = 0, tol: float = 1e-9) -> AuditReport:
    vs = unit_directions(ctx, 2 * n, seed)
    worst = min(monotonicity_probe(ctx, (1 + k % 5) * vs[2 * k], vs[2 * k + 1]) for k in range(n))
    return AuditReport("monotonicity", worst >= -tol, worst + tol, n)


def check_convexity_inequality(ctx: WeakFormContext, n: int = 100, seed: int = 0,
                               tol: float = 1e-9) -> AuditReport:
    """``F(v) - F(u) - <F'(u), v - u> >= -tol``."""
    vs = unit_directions(ctx, 2 * n, seed)
    worst = math.inf
    for k in range(n):
        u, v = (1 + k % 5) * vs[2 * k], vs[2 * k + 1]
        gap = modular_F(ctx, v) - modular_F(ctx, u) - float(gradient_F(ctx, u) @ (v - u).interior)
        worst = min(worst, gap)
    return AuditReport("convexity_inequality", worst >= -tol, worst + tol, n)


def check_poincare(M: YoungFunction, domain: Domain, s: float, n: int = 200, seed: int = 0,
                   scheme=None) -> AuditReport:
    """Estimator is finite, positive and dominates every sampled ratio."""
    est = poincare_estimate(M, domain, s, n, seed, scheme)
    ok = math.isfinite(est.value) and est.value > 0 and bool(np.all(est.ratios <= est.value))
    return AuditReport("poincare", ok, est.value - float(est.ratios.max()), est.n_samples,
                       {"mu_hat": est.value})
