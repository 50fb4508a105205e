"""Orlicz modulars, Luxemburg norms and the Gagliardo seminorm.

All quantities are evaluated on the quadrature tables of :mod:`orlisov.quadrature`;
the Luxemburg search reuses the difference quotients ``D u`` so each trial
scaling costs one pass of ``M`` over the rows.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._reduce import fsum_blocks
from .errors import BracketError, ConfigurationError
from .grid import Domain, GridFunction, QuadratureScheme, fixture, random_nodal
from .quadrature import EXTERIOR_FAR, EXTERIOR_NEAR, cell_table, pair_table
from .young import YoungFunction

__all__ = [
    "ModularValue", "LuxemburgResult", "PoincareEstimate", "modular_LM", "norm_LM",
    "modular_gagliardo", "seminorm_gagliardo", "full_norm", "poincare_estimate",
    "luxemburg", "resolve_scheme",
]

LUX_TOL = 1e-10
MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class ModularValue:
    """Gagliardo modular with its exterior bookkeeping.

    ``value`` is the whole modular.  For the extended scope,
    ``tail_contribution`` is the part coming from pairs with one point outside
    the domain, ``far_tail`` the part of that with ``|x - y| > tail_radius``
    and ``remainder_bound`` an a priori bound on ``far_tail`` obtained from the
    growth indices alone.
    """

    value: float
    scheme: QuadratureScheme
    scope: str = "extended"
    tail_contribution: float = 0.0
    far_tail: float = 0.0
    remainder_bound: float = 0.0

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class LuxemburgResult:
    norm: float
    modular_at_norm: float
    bisection_iters: int

    def __float__(self) -> float:
        return self.norm


@dataclass(frozen=True)
class PoincareEstimate:
    """Sampled lower bound for the Poincare constant (max of the ratios)."""

    value: float
    ratios: np.ndarray = field(repr=False)
    labels: tuple[str, ...] = field(repr=False)

    @property
    def n_samples(self) -> int:
        return len(self.ratios)

    def __float__(self) -> float:
        return self.value


def resolve_scheme(domain: Domain, scheme: QuadratureScheme | None) -> QuadratureScheme:
    return QuadratureScheme.default(domain.dim) if scheme is None else scheme


def luxemburg(rho, *, tol: float = LUX_TOL) -> LuxemburgResult:
    """Solve ``rho(lam) = 1`` for a strictly decreasing modular ``lam -> rho(lam)``.

    The bracket is found by doubling/halving from ``lam = 1``; the root by
    Brent's method, finished by plain bisection if the modular is not yet
    within ``tol`` of 1.
    """
    iters = 0
    lo = hi = 1.0
    if rho(1.0) > 1:
        while rho(hi) > 1:
            lo, hi = hi, 2 * hi
            iters += 1
            if iters > MAX_DOUBLINGS:
                raise BracketError("Luxemburg bracket not found (modular stays above 1)")
    else:
        while rho(lo) <= 1:
            hi, lo = lo, 0.5 * lo
            iters += 1
            if iters > MAX_DOUBLINGS:
                raise BracketError("Luxemburg bracket not found (modular stays below 1)")
    if lo == hi:
        return LuxemburgResult(1.0, rho(1.0), iters)
    f = lambda lam: rho(lam) - 1.0  # noqa: E731
    root, info = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                 maxiter=200, full_output=True, disp=False)
    iters += info.iterations
    val = rho(root)
    # brentq stops on the abscissa; make sure the modular itself is on target
    while abs(val - 1) > tol and iters < MAX_DOUBLINGS + 400:
        if val > 1:
            lo = root
        else:
            hi = root
        root = 0.5 * (lo + hi)
        val = rho(root)
        iters += 1
    return LuxemburgResult(float(root), float(val), iters)


# ---------------------------------------------------------------------------
# Orlicz modular on the domain

def modular_LM(M: YoungFunction, u: GridFunction, scheme: QuadratureScheme | None = None) -> float:
    """Cell Gauss quadrature of ``int_Omega M(u(x)) dx``."""
    if u.is_zero():
        return 0.0
    ct = cell_table(u.domain, resolve_scheme(u.domain, scheme))
    return ct.integrate(M.M(ct.B @ u.flat))


def norm_LM(M: YoungFunction, u: GridFunction, scheme: QuadratureScheme | None = None) -> LuxemburgResult:
    """Luxemburg norm ``inf{lam > 0 : int M(u / lam) <= 1}``."""
    if u.is_zero():
        return LuxemburgResult(0.0, 0.0, 0)
    ct = cell_table(u.domain, resolve_scheme(u.domain, scheme))
    vals = ct.B @ u.flat
    return luxemburg(lambda lam: ct.integrate(M.M(vals / lam)))


# ---------------------------------------------------------------------------
# Gagliardo modular

def _table(u: GridFunction, s: float, scope: str, scheme):
    if scope == "extended" and not u.conforming:
        raise ConfigurationError("extended scope needs a function vanishing on the boundary")
    return pair_table(u.domain, resolve_scheme(u.domain, scheme), float(s), scope)


def _far_bound(M: YoungFunction, u: GridFunction, s: float, scheme) -> float:
    """Bound on the interaction beyond ``tail_radius`` from ``M(t) <= M(1) max(t^m0, t^m_sup)``."""
    dom = u.domain
    ct = cell_table(dom, resolve_scheme(dom, scheme))
    a = np.abs(ct.B @ u.flat) * dom.tail_radius ** -s
    m0, m1 = M.m0, M.m_sup
    sphere = 2.0 if dom.dim == 1 else 2 * math.pi
    M1 = float(M.M(1.0))
    per_point = sphere * M1 / s * (a ** m0 / m0 + a ** m1 / m1)
    return 2 * ct.integrate(per_point)


def modular_gagliardo(M: YoungFunction, u: GridFunction, s: float, scope: str = "extended",
                      scheme: QuadratureScheme | None = None) -> ModularValue:
    """``int int M((u(x) - u(y)) / |x-y|^s) dx dy / |x-y|^N``.

    ``scope="domain"`` integrates over the domain squared; ``"extended"``
    over the whole space for the zero extension of ``u``.
    """
    scheme = resolve_scheme(u.domain, scheme)
    if u.is_zero():
        return ModularValue(0.0, scheme, scope)
    table = _table(u, s, scope, scheme)
    vals = M.M(table.quotients(u.flat))
    total = table.weighted_sum(vals)
    if scope == "domain":
        return ModularValue(total, scheme, scope)
    near = table.weighted_sum(vals, table.kind == EXTERIOR_NEAR)
    far = table.weighted_sum(vals, table.kind == EXTERIOR_FAR)
    return ModularValue(total, scheme, scope, tail_contribution=near + far, far_tail=far,
                        remainder_bound=_far_bound(M, u, s, scheme))


def seminorm_gagliardo(M: YoungFunction, u: GridFunction, s: float, scope: str = "extended",
                       scheme: QuadratureScheme | None = None) -> LuxemburgResult:
    """Luxemburg norm built on the Gagliardo modular."""
    if u.is_zero():
        return LuxemburgResult(0.0, 0.0, 0)
    table = _table(u, s, scope, scheme)
    z = table.quotients(u.flat)
    W = table.W
    return luxemburg(lambda lam: fsum_blocks(W * M.M(z / lam)))


def full_norm(M: YoungFunction, u: GridFunction, s: float, scope: str = "extended",
              scheme: QuadratureScheme | None = None) -> float:
    return norm_LM(M, u, scheme).norm + seminorm_gagliardo(M, u, s, scope, scheme).norm


# ---------------------------------------------------------------------------
# Poincare constant

def _smooth_random(domain: Domain, rng: np.random.Generator) -> GridFunction:
    """Random combination of the first few separable sine modes."""
    coords = np.meshgrid(*domain.axes(), indexing="ij")
    vals = np.zeros(domain.node_shape)
    for k in itertools.product(range(1, 5), repeat=domain.dim):
        mode = np.ones(domain.node_shape)
        for x, (a, b), kk in zip(coords, domain.bounds, k):
            mode = mode * np.sin(kk * np.pi * (x - a) / (b - a))
        vals += rng.normal() / float(np.prod(k)) * mode
    vals[~domain.interior_mask()] = 0.0
    return GridFunction(domain, vals)


def sample_functions(domain: Domain, n_samples: int, seed: int):
    """Deterministic fixtures followed by seeded random draws.

    Random draws alternate between smooth low-mode combinations and rough
    i.i.d. nodal values.  Yields ``(label, GridFunction)``.
    """
    rng = np.random.default_rng(seed)
    fixed = ["bubble", "hat", "sine1", "sine2", "sine3"]
    for k in range(n_samples):
        if k < len(fixed):
            yield fixed[k], fixture(fixed[k], domain)
        elif k % 2:
            yield f"smooth[{k}]", _smooth_random(domain, rng)
        else:
            yield f"nodal[{k}]", random_nodal(domain, rng)


def poincare_estimate(M: YoungFunction, domain: Domain, s: float, n_samples: int = 200, seed: int = 0,
                      scheme: QuadratureScheme | None = None) -> PoincareEstimate:
    """Largest sampled ratio ``||u||_M / [u]_{s,M}`` (extended scope).

    This is a lower bound for the best constant in the Poincare inequality,
    not a certified upper bound.
    """
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    ratios, labels = [], []
    for label, u in sample_functions(domain, n_samples, seed):
        if u.is_zero():
            continue
        ratios.append(norm_LM(M, u, scheme).norm / seminorm_gagliardo(M, u, s, "extended", scheme).norm)
        labels.append(label)
    r = np.array(ratios)
    return PoincareEstimate(float(r.max()), r, tuple(labels))
