"""Nonlinearities ``g``/``G``, their growth hypotheses, and the energy ``I_lambda``.

``I_lambda(u) = F(u) - lambda * int_Omega G(x, u(x)) dx`` with ``F`` the
Gagliardo modular (extended scope by default).  The hypotheses checked by
:func:`validate_hypotheses` are

* (A) ``|g(x, t)| <= C0 |t|^(q-1)``
* (B) ``C1 |t|^q <= G(x, t) <= C2 |t|^q``
* (Q) ``|t|^q / M(t) -> 0``

together with the gate ``q < min(p*, m0)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, InvalidFunctionError
from .grid import GridFunction
from .operator import WeakFormContext
from .young import AuditReport, SampleSpec, YoungFunction, audit_Q_condition

__all__ = [
    "NLKind", "Nonlinearity", "EnergyValue", "eval_g", "eval_G", "estimate_constants",
    "critical_exponent", "validate_hypotheses", "energy", "energy_gradient",
    "energy_and_gradient", "SAFETY",
]

SAFETY = 1.05


class NLKind(str, enum.Enum):
    PURE_POWER = "pure_power"
    LOG_POWER = "log_power"
    CUSTOM = "custom"


def _pure_g(q):
    return lambda x, t: q * np.abs(t) ** (q - 1) * np.sign(t)


def _pure_G(q):
    return lambda x, t: np.abs(t) ** q


def _log_G(q):
    return lambda x, t: np.log1p(t * t) * np.abs(t) ** (q - 2)


def _log_g(q):
    # derivative of log(1+t^2)|t|^(q-2)
    def g(x, t):
        a = np.abs(t)
        return np.sign(t) * ((q - 2) * np.log1p(a * a) * a ** (q - 3) + 2 * a ** (q - 1) / (1 + a * a))
    return g


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Right-hand side ``g(x, t)`` with primitive ``G(x, t) = int_0^t g(x, s) ds``.

    Rules take ``(x, t)`` where ``x`` has shape ``(n, dim)`` (or is ``None``
    for x-independent rules) and ``t`` shape ``(n,)``.
    """

    kind: NLKind
    q: float
    g_rule: Callable = field(repr=False)
    G_rule: Callable = field(repr=False)
    C0: float | None = None
    C1: float | None = None
    C2: float | None = None
    constants_source: str = "given"
    x_dependent: bool = False
    name: str = ""

    @classmethod
    def pure_power(cls, q: float) -> "Nonlinearity":
        q = float(q)
        if not q > 1:
            raise InvalidFunctionError(f"pure power nonlinearity needs q > 1, got {q}")
        return cls(NLKind.PURE_POWER, q, _pure_g(q), _pure_G(q), C0=q, C1=1.0, C2=1.0,
                   name=f"pure_power(q={q:g})")

    @classmethod
    def log_power(cls, q: float, spec: SampleSpec | None = None) -> "Nonlinearity":
        """``G = log(1 + t^2) |t|^(q-2)``, constants estimated by sampling."""
        q = float(q)
        if not q > 4:
            raise InvalidFunctionError(f"log-power nonlinearity needs q > 4, got {q}")
        nl = cls(NLKind.LOG_POWER, q, _log_g(q), _log_G(q), name=f"log_power(q={q:g})")
        return estimate_constants(nl, spec or SampleSpec())

    @classmethod
    def custom(cls, g: Callable, G: Callable, q: float, *, C0=None, C1=None, C2=None,
               x_dependent: bool = False, name: str = "custom") -> "Nonlinearity":
        nl = cls(NLKind.CUSTOM, float(q), g, G, C0, C1, C2, "given", x_dependent, name)
        if None in (C0, C1, C2):
            nl = estimate_constants(nl, SampleSpec())
        return nl

    def g(self, x, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.asarray(self.g_rule(x if self.x_dependent else None, t), dtype=float) * np.ones_like(t)

    def G(self, x, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.asarray(self.G_rule(x if self.x_dependent else None, t), dtype=float) * np.ones_like(t)


def _finite(t):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite argument")
    return arr


def eval_g(nl: Nonlinearity, x, t):
    out = nl.g(x, _finite(t))
    return float(out) if np.ndim(out) == 0 else out


def eval_G(nl: Nonlinearity, x, t):
    out = nl.G(x, _finite(t))
    return float(out) if np.ndim(out) == 0 else out


def _samples(nl: Nonlinearity, spec: SampleSpec, points):
    t = spec.grid()
    t = np.concatenate([t, -t])
    if nl.x_dependent and points is not None:
        pts = np.asarray(points, dtype=float)
        x = np.repeat(pts, len(t), axis=0)
        t = np.tile(t, len(pts))
        return x, t
    return None, t


def estimate_constants(nl: Nonlinearity, spec: SampleSpec = SampleSpec(), points=None) -> Nonlinearity:
    """Fill ``C0, C1, C2`` from extremal sampled ratios with a 5% safety margin.

    Constants already supplied are kept.
    """
    x, t = _samples(nl, spec, points)
    a = np.abs(t)
    r_g = np.abs(nl.g(x, t)) / a ** (nl.q - 1)
    r_G = nl.G(x, t) / a ** nl.q
    return replace(
        nl,
        C0=nl.C0 if nl.C0 is not None else SAFETY * float(r_g.max()),
        C1=nl.C1 if nl.C1 is not None else float(r_G.min()) / SAFETY,
        C2=nl.C2 if nl.C2 is not None else SAFETY * float(r_G.max()),
        constants_source="estimated",
    )


def critical_exponent(m0: float, dim: int) -> float:
    """``N p / (N - p)`` with ``p = m0``; infinite when ``m0 >= N`` (guard inactive)."""
    return dim * m0 / (dim - m0) if m0 < dim else math.inf


def _primitive_check(nl: Nonlinearity, points, n: int = 24) -> float:
    """Worst relative mismatch between ``int_0^t g`` and ``G`` on a few abscissae."""
    ts = np.concatenate([np.geomspace(1e-3, 1e3, n // 2), -np.geomspace(1e-3, 1e3, n // 2)])
    xs = [None] if not (nl.x_dependent and points is not None) else [np.atleast_2d(p) for p in points[:3]]
    worst = 0.0
    for x in xs:
        for t in ts:
            val, _ = integrate.quad(lambda s: float(nl.g(x, np.array([s]))[0]), 0.0, t,
                                    epsabs=0, epsrel=1e-12, limit=200)
            ref = float(nl.G(x, np.array([t]))[0])
            worst = max(worst, abs(val - ref) / max(abs(ref), 1e-300))
    return worst


def validate_hypotheses(nl: Nonlinearity, M: YoungFunction, spec: SampleSpec = SampleSpec(), *,
                        dim: int = 1, points=None, rtol: float = 1e-12) -> AuditReport:
    """Check (A), (B), (Q), the primitive relation and the gate ``q < min(p*, m0)``.

    ``worst_margin`` is the smallest of the individual (relative) margins.
    """
    if nl.C0 is None or nl.C1 is None or nl.C2 is None:
        nl = estimate_constants(nl, spec, points)
    x, t = _samples(nl, spec, points)
    a = np.abs(t)
    tq = a ** nl.q
    margin_A = float(np.min(1 - np.abs(nl.g(x, t)) / (nl.C0 * a ** (nl.q - 1))))
    G = nl.G(x, t)
    margin_B_low = float(np.min((G - nl.C1 * tq) / (nl.C2 * tq)))
    margin_B_up = float(np.min((nl.C2 * tq - G) / (nl.C2 * tq)))
    q_report = audit_Q_condition(M, nl.q)
    prim = _primitive_check(nl, points)
    m0 = M.m0
    p_star = critical_exponent(m0, dim)
    gate = min(p_star, m0) - nl.q
    checks = {
        "A": margin_A >= -rtol,
        "B_lower": margin_B_low >= -rtol and nl.C1 > 0,
        "B_upper": margin_B_up >= -rtol,
        "Q": q_report.passed,
        "primitive": prim <= 1e-8,
        "gate": gate > 0,
    }
    details = {
        "C0": nl.C0, "C1": nl.C1, "C2": nl.C2, "constants": nl.constants_source,
        "margin_A": margin_A, "margin_B_lower": margin_B_low, "margin_B_upper": margin_B_up,
        "Q_margin": q_report.worst_margin, "primitive_error": prim,
        "m0": m0, "p_star": p_star,
        "p_star_guard": "active" if math.isfinite(p_star) else "p* guard inactive",
        "gate_margin": gate, "checks": checks,
    }
    worst = min(margin_A, margin_B_low, margin_B_up, q_report.worst_margin, 1e-8 - prim, gate)
    return AuditReport("hypotheses", all(checks.values()), worst, len(t), details)


# ---------------------------------------------------------------------------
# energy

@dataclass(frozen=True)
class EnergyValue:
    total: float
    modular_part: float
    potential_part: float
    lam: float

    def __float__(self) -> float:
        return self.total


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam >= 0 and math.isfinite(lam)):
        raise DomainError(f"lambda must be finite and nonnegative, got {lam}")
    return lam


def _potential(ctx: WeakFormContext, nl: Nonlinearity, U: np.ndarray):
    ct = ctx.cells
    vals = ct.B @ U
    return ct, vals


def energy(ctx: WeakFormContext, nl: Nonlinearity, lam: float, u: GridFunction) -> EnergyValue:
    lam = _check_lambda(lam)
    ctx.check(u)
    if u.is_zero():
        return EnergyValue(0.0, 0.0, 0.0, lam)
    F = ctx.table.modular(ctx.M, u.flat)
    ct, vals = _potential(ctx, nl, u.flat)
    P = ct.integrate(nl.G(ct.points, vals))
    return EnergyValue(F - lam * P, F, P, lam)


def energy_and_gradient(ctx: WeakFormContext, nl: Nonlinearity, lam: float,
                        u: GridFunction) -> tuple[EnergyValue, np.ndarray]:
    """Energy and its interior-node gradient from one pass over the tables."""
    lam = _check_lambda(lam)
    ctx.check(u)
    F, gF = ctx.table.value_and_gradient(ctx.M, u.flat)
    ct, vals = _potential(ctx, nl, u.flat)
    P = ct.integrate(nl.G(ct.points, vals))
    grad = gF - lam * ct.load(nl.g(ct.points, vals))
    return EnergyValue(F - lam * P, F, P, lam), grad[ctx.interior_index]


def energy_gradient(ctx: WeakFormContext, nl: Nonlinearity, lam: float, u: GridFunction) -> np.ndarray:
    """``<I'(u), phi_i> = <F'(u), phi_i> - lambda int g(x, u) phi_i`` over interior nodes."""
    return energy_and_gradient(ctx, nl, lam, u)[1]
