"""Young functions: evaluation, growth indices, conjugates and structural audits.

A Young function is represented through its density ``m`` on ``[0, inf)``;
``M(t) = int_0^|t| m``.  Three closed-form families are built in::

    power(p)          M(t) = |t|^p
    power_sum(p, q)   M(t) = |t|^p + |t|^q
    bump_power(g)     M(t) = (1 + t^2)^g - 1

and :meth:`YoungFunction.custom` wraps user supplied ``M`` and ``m``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import BracketError, DomainError, InvalidFunctionError

__all__ = [
    "Kind", "YoungFunction", "GrowthIndices", "AuditReport", "SampleSpec",
    "eval_M", "eval_m", "growth_indices", "m_inverse", "conjugate_eval", "conjugate",
    "audit_delta2", "audit_S_condition", "audit_scaling_inequalities", "audit_Q_condition",
    "audit_convexity", "audit_integral_representation", "audit_young_inequality",
]


class Kind(str, enum.Enum):
    POWER = "power"
    POWER_SUM = "power_sum"
    BUMP_POWER = "bump_power"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SampleSpec:
    """Logarithmic sampling grid ``t_min .. t_max`` with ``n`` points."""

    t_min: float = 1e-8
    t_max: float = 1e8
    n: int = 4096

    def grid(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.n)


@dataclass(frozen=True)
class GrowthIndices:
    m0: float
    m_sup: float
    argmin_t: float = math.nan
    argmax_t: float = math.nan
    source: str = "closed_form"


@dataclass
class AuditReport:
    """Outcome of one structural check.

    ``worst_margin`` is signed: nonnegative means the checked inequality held
    everywhere it was sampled (with the tolerance already folded in).
    """

    name: str
    passed: bool
    worst_margin: float
    samples: int
    details: dict = field(default_factory=dict)


def _check_finite(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite argument")
    return arr


@dataclass(frozen=True, eq=False)
class YoungFunction:
    kind: Kind
    p: float = math.nan
    q: float = math.nan
    gamma: float = math.nan
    M_rule: Callable | None = field(default=None, repr=False)
    m_rule: Callable | None = field(default=None, repr=False)
    known_indices: tuple[float, float] | None = None
    name: str = ""

    # -- constructors -----------------------------------------------------
    @classmethod
    def power(cls, p: float) -> "YoungFunction":
        if not p > 1:
            raise InvalidFunctionError(f"power Young function needs p > 1, got {p}")
        return cls(Kind.POWER, p=float(p), name=f"power(p={p:g})")

    @classmethod
    def power_sum(cls, p: float, q: float) -> "YoungFunction":
        if not 1 < p < q:
            raise InvalidFunctionError(f"power_sum needs 1 < p < q, got p={p}, q={q}")
        return cls(Kind.POWER_SUM, p=float(p), q=float(q), name=f"power_sum(p={p:g},q={q:g})")

    @classmethod
    def bump_power(cls, gamma: float) -> "YoungFunction":
        if not gamma > 0.5:
            raise InvalidFunctionError(f"bump_power needs gamma > 1/2, got {gamma}")
        return cls(Kind.BUMP_POWER, gamma=float(gamma), name=f"bump_power(gamma={gamma:g})")

    @classmethod
    def custom(cls, M: Callable, m: Callable, *, indices=None, name: str = "custom",
               check: bool = True) -> "YoungFunction":
        """Wrap ``M`` and its density ``m``, both vectorized rules on ``t >= 0``.

        With ``check`` the pair is tested for ``M(t) = int_0^t m`` at sampled
        points; a mismatch raises :class:`InvalidFunctionError`.
        """
        fn = cls(Kind.CUSTOM, M_rule=M, m_rule=m,
                 known_indices=None if indices is None else (float(indices[0]), float(indices[1])),
                 name=name)
        if check:
            rep = audit_integral_representation(fn)
            if not rep.passed:
                raise InvalidFunctionError(
                    f"M and m are inconsistent (relative mismatch {-rep.worst_margin:.3g})")
        return fn

    # -- evaluation on |t| --------------------------------------------------
    def _M_abs(self, a: np.ndarray) -> np.ndarray:
        if self.kind is Kind.POWER:
            return a ** self.p
        if self.kind is Kind.POWER_SUM:
            return a ** self.p + a ** self.q
        if self.kind is Kind.BUMP_POWER:
            return np.expm1(self.gamma * np.log1p(a * a))
        return np.asarray(self.M_rule(a), dtype=float)

    def _m_abs(self, a: np.ndarray) -> np.ndarray:
        if self.kind is Kind.POWER:
            return self.p * a ** (self.p - 1)
        if self.kind is Kind.POWER_SUM:
            return self.p * a ** (self.p - 1) + self.q * a ** (self.q - 1)
        if self.kind is Kind.BUMP_POWER:
            return 2 * self.gamma * a * (1 + a * a) ** (self.gamma - 1)
        return np.asarray(self.m_rule(a), dtype=float)

    def M(self, t):
        """Even extension ``M(|t|)``; no finiteness check (hot path)."""
        return self._M_abs(np.abs(t))

    def m(self, t):
        """Odd extension ``sign(t) m(|t|)``."""
        t = np.asarray(t, dtype=float)
        return np.sign(t) * self._m_abs(np.abs(t))

    # -- indices ----------------------------------------------------------
    def closed_form_indices(self) -> tuple[float, float] | None:
        if self.kind is Kind.POWER:
            return self.p, self.p
        if self.kind is Kind.POWER_SUM:
            return self.p, self.q
        if self.kind is Kind.BUMP_POWER:
            return min(2.0, 2 * self.gamma), max(2.0, 2 * self.gamma)
        return self.known_indices

    @cached_property
    def indices(self) -> GrowthIndices:
        return growth_indices(self)

    @property
    def m0(self) -> float:
        return self.indices.m0

    @property
    def m_sup(self) -> float:
        return self.indices.m_sup

    def __repr__(self) -> str:
        return f"YoungFunction({self.name})"


def eval_M(M: YoungFunction, t):
    """``M(t)``; raises :class:`DomainError` on non-finite input."""
    out = M.M(_check_finite(t))
    return float(out) if np.ndim(out) == 0 else out


def eval_m(M: YoungFunction, t):
    """``sign(t) m(|t|)``; raises :class:`DomainError` on non-finite input."""
    out = M.m(_check_finite(t))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# growth indices

def _index_ratio(M: YoungFunction, t: np.ndarray) -> np.ndarray:
    Mt = M._M_abs(t)
    if np.any(Mt <= 0):
        bad = t[np.argmax(Mt <= 0)]
        raise InvalidFunctionError(f"M vanishes at t={bad:g} > 0 (degenerate Young function)")
    return t * M._m_abs(t) / Mt


def growth_indices(M: YoungFunction, spec: SampleSpec = SampleSpec(), *,
                   method: str = "auto") -> GrowthIndices:
    """inf / sup of ``t m(t) / M(t)`` over ``t > 0``.

    ``method="auto"`` returns the closed form for the built-in families and
    samples otherwise; ``"sample"`` always samples a log grid and refines each
    extreme by a bounded golden-section search between its grid neighbours.
    """
    if method == "auto":
        cf = M.closed_form_indices()
        if cf is not None:
            return GrowthIndices(cf[0], cf[1], source="closed_form")
    elif method != "sample":
        raise ValueError(f"unknown method {method!r}")

    t = spec.grid()
    r = _index_ratio(M, t)
    logt = np.log(t)

    def refine(k: int, sign: float) -> tuple[float, float]:
        lo, hi = logt[max(k - 1, 0)], logt[min(k + 1, t.size - 1)]
        best_t, best_r = t[k], r[k]
        if hi > lo:
            res = optimize.minimize_scalar(
                lambda z: sign * _index_ratio(M, np.array([math.exp(z)]))[0],
                bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
            cand = sign * res.fun
            if sign * cand < sign * best_r:
                best_t, best_r = math.exp(res.x), cand
        return float(best_t), float(best_r)

    tmin, rmin = refine(int(np.argmin(r)), 1.0)
    tmax, rmax = refine(int(np.argmax(r)), -1.0)
    return GrowthIndices(rmin, rmax, tmin, tmax, source="sampled")


# ---------------------------------------------------------------------------
# conjugate

def m_inverse(M: YoungFunction, s, *, tol: float = 1e-12, max_doublings: int = 200):
    """Inverse density ``m^{-1}(s)`` by vectorized monotone bisection (odd in ``s``)."""
    s = _check_finite(s)
    target = np.abs(np.atleast_1d(s)).astype(float)
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    for _ in range(max_doublings):
        short = M._m_abs(hi) < target
        if not short.any():
            break
        hi = np.where(short, 2 * hi, hi)
    else:
        raise BracketError("m does not reach the requested value: cannot invert")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        below = M._m_abs(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= tol * np.maximum(hi, 1e-300)):
            break
    out = np.sign(np.atleast_1d(s)) * 0.5 * (lo + hi)
    return float(out[0]) if np.ndim(s) == 0 else out


def conjugate_eval(M: YoungFunction, t, *, rtol: float = 1e-10):
    """Complementary function ``int_0^|t| m^{-1}(s) ds`` by adaptive Gauss-Kronrod.

    Requires a strictly increasing ``m`` (true for the built-ins); the inner
    inverse is a bisection with relative tolerance 1e-12.
    """
    t = _check_finite(t)
    a = np.abs(np.atleast_1d(t)).astype(float)
    if not np.any(a > 0):
        return 0.0 if np.ndim(t) == 0 else np.zeros_like(a)

    # s = a*y^2: one vector-valued integral covers every t, and the y^2 map
    # smooths the root-type behaviour of m^{-1} at the origin
    def integrand(y):
        return 2 * y * a * m_inverse(M, a * y * y)

    val, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsrel=rtol, epsabs=0.0, limit=400)
    val = np.asarray(val, dtype=float)
    return float(val[0]) if np.ndim(t) == 0 else val


def conjugate(M: YoungFunction) -> YoungFunction:
    """The complementary Young function as a custom :class:`YoungFunction`."""
    cf = M.closed_form_indices()
    idx = None
    if cf is not None:
        # t m/M has conjugate indices m_sup' = m0/(m0-1), m0' = m_sup/(m_sup-1)
        idx = (cf[1] / (cf[1] - 1), cf[0] / (cf[0] - 1))
    return YoungFunction.custom(lambda a: conjugate_eval(M, a), lambda a: m_inverse(M, a),
                                indices=idx, name=f"conjugate({M.name})", check=False)


# ---------------------------------------------------------------------------
# audits

def audit_delta2(M: YoungFunction, spec: SampleSpec = SampleSpec(n=10_000)) -> AuditReport:
    """Doubling bound ``M(2t) <= K M(t)`` with the candidate ``K = 2**m_sup``."""
    t = spec.grid()
    ratio = M._M_abs(2 * t) / M._M_abs(t)
    K = 2.0 ** M.m_sup
    worst = float(ratio.max())
    margin = (K * (1 + 1e-12) - worst) / K
    return AuditReport("delta2", margin >= 0, margin, t.size, {"K": K, "max_ratio": worst})


def audit_S_condition(M: YoungFunction, spec: SampleSpec = SampleSpec(1e-6, 1e6, 1000)) -> AuditReport:
    """Convexity of ``t -> M(sqrt(t))`` through second divided differences."""
    t = spec.grid()
    f = M._M_abs(np.sqrt(t))
    slope = np.diff(f) / np.diff(t)
    scale = np.maximum(np.abs(slope[1:]), np.abs(slope[:-1]))
    rel = (slope[1:] - slope[:-1]) / np.where(scale > 0, scale, 1.0)
    worst = float(rel.min())
    return AuditReport("S_condition", worst >= -1e-9, worst + 1e-9, t.size,
                       {"min_second_difference": float((slope[1:] - slope[:-1]).min())})


def audit_scaling_inequalities(M: YoungFunction, n: int = 10_000, seed: int = 0,
                               rtol: float = 1e-10) -> AuditReport:
    """The four power-scaling bounds implied by the growth indices.

    For ``sigma > 1``: ``sigma^m0 M(t) <= M(sigma t) <= sigma^m_sup M(t)``;
    for ``tau in (0, 1)``: ``tau^m_sup M(t/tau) <= M(t) <= tau^m0 M(t/tau)``.
    """
    rng = np.random.default_rng(seed)
    t = 10.0 ** rng.uniform(-6, 6, n)
    sigma = 10.0 ** rng.uniform(0, 3, n)
    tau = 10.0 ** rng.uniform(-3, 0, n)
    m0, ms = M.m0, M.m_sup
    Mt = M._M_abs(t)
    Ms = M._M_abs(sigma * t)
    Mtau = M._M_abs(t / tau)
    checks = {
        "lower_sigma": (Ms - sigma ** m0 * Mt) / Ms,
        "upper_sigma": (sigma ** ms * Mt - Ms) / Ms,
        "lower_tau": (Mt - tau ** ms * Mtau) / Mt,
        "upper_tau": (tau ** m0 * Mtau - Mt) / Mt,
    }
    worst = {k: float(v.min()) for k, v in checks.items()}
    margin = min(worst.values()) + rtol
    return AuditReport("scaling_inequalities", margin >= 0, margin, 4 * n, worst)


def audit_Q_condition(M: YoungFunction, q: float, decay: float = 1e-2) -> AuditReport:
    """Finite probe of ``t^q / M(t) -> 0`` on ``t = 10, 100, ..., 1e6``.

    Passes when the last three values decrease strictly and the final value is
    below ``decay`` times the first.
    """
    if not q > 1:
        raise DomainError(f"q must exceed 1, got {q}")
    t = 10.0 ** np.arange(1, 7)
    vals = t ** q / M._M_abs(t)
    decreasing = bool(np.all(np.diff(vals[-3:]) < 0))
    ratio = float(vals[-1] / vals[0])
    passed = decreasing and ratio < decay
    return AuditReport("Q_condition", passed, math.log10(decay) - math.log10(ratio) if ratio > 0 else math.inf,
                       t.size, {"tail": vals.tolist(), "q": q, "q_below_m0": q < M.m0})


def audit_convexity(M: YoungFunction, n: int = 10_000, seed: int = 0) -> AuditReport:
    """Random secant test ``M(a x + (1-a) y) <= a M(x) + (1-a) M(y)``."""
    rng = np.random.default_rng(seed)
    x = 10.0 ** rng.uniform(-3, 3, n)
    y = 10.0 ** rng.uniform(-3, 3, n)
    a = rng.uniform(0, 1, n)
    rhs = a * M._M_abs(x) + (1 - a) * M._M_abs(y)
    lhs = M._M_abs(a * x + (1 - a) * y)
    margin = float(((rhs - lhs) / rhs).min()) + 1e-12
    return AuditReport("convexity", margin >= 0, margin, n)


def audit_integral_representation(M: YoungFunction, points=None, rtol: float = 1e-8) -> AuditReport:
    """``M(t) = int_0^t m`` at sampled ``t`` (adaptive quadrature)."""
    t = np.geomspace(1e-3, 1e3, 13) if points is None else np.asarray(points, dtype=float)

    def integrand(x):
        return t * M._m_abs(t * x)

    integral, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsrel=1e-12, epsabs=0.0, limit=400)
    Mt = M._M_abs(t)
    rel = np.abs(integral - Mt) / np.maximum(np.abs(Mt), 1e-300)
    return AuditReport("integral_representation", bool(rel.max() <= rtol), float(rtol - rel.max()), t.size)


def audit_young_inequality(M: YoungFunction, n: int = 10_000, seed: int = 0,
                           atol: float = 1e-8, eq_tol: float = 1e-6) -> AuditReport:
    """``s t <= M(s) + conj(t)`` on random pairs in ``(0, 10]^2``, with equality at ``t = m(s)``."""
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, 10, n)
    t = rng.uniform(0, 10, n)
    gap = M._M_abs(s) + conjugate_eval(M, t) - s * t
    s_eq = np.linspace(0.1, 3.0, 30)
    t_eq = M._m_abs(s_eq)
    eq_gap = np.abs(M._M_abs(s_eq) + conjugate_eval(M, t_eq) - s_eq * t_eq)
    eq_rel = eq_gap / np.maximum(1.0, s_eq * t_eq)
    margin = min(float(gap.min()) + atol, eq_tol - float(eq_rel.max()))
    return AuditReport("young_inequality", margin >= 0, margin, n + s_eq.size,
                       {"min_gap": float(gap.min()), "max_equality_defect": float(eq_rel.max())})
