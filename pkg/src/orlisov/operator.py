"""Weak form of the fractional M-Laplacian and the derivative of the modular.

``<F'(u), v> = int int m((u(x)-u(y))/|x-y|^s) (v(x)-v(y))/|x-y|^s dx dy/|x-y|^N``

evaluated on exactly the rows used for the modular, so the discrete
derivative of the discrete modular is exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .grid import Domain, GridFunction, QuadratureScheme
from .quadrature import CellTable, PairTable, cell_table, pair_table
from .young import YoungFunction

__all__ = ["WeakFormContext", "apply_weak", "gradient_F", "gradient_full", "monotonicity_probe", "modular_F"]


@dataclass(frozen=True, eq=False)
class WeakFormContext:
    """Young function, fractional order and discretization bundled together.

    Pair and cell tables are built on first use and shared through the
    module-level caches of :mod:`orlisov.quadrature`.
    """

    M: YoungFunction
    s: float
    domain: Domain
    scheme: QuadratureScheme | None = None
    scope: str = "extended"

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ConfigurationError(f"s must lie in (0, 1), got {self.s}")
        if self.scope not in ("domain", "extended"):
            raise ConfigurationError(f"unknown scope {self.scope!r}")
        if self.scheme is None:
            object.__setattr__(self, "scheme", QuadratureScheme.default(self.domain.dim))
        object.__setattr__(self, "s", float(self.s))

    @cached_property
    def table(self) -> PairTable:
        return pair_table(self.domain, self.scheme, self.s, self.scope)

    @cached_property
    def cells(self) -> CellTable:
        return cell_table(self.domain, self.scheme)

    @cached_property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(self.domain.interior_mask().ravel())

    def check(self, *funcs: GridFunction) -> None:
        for f in funcs:
            if f.domain != self.domain:
                raise ConfigurationError("grid function does not live on the context domain")


def modular_F(ctx: WeakFormContext, u: GridFunction) -> float:
    """The discrete modular ``F(u)`` on the context's tables."""
    ctx.check(u)
    return ctx.table.modular(ctx.M, u.flat)


def apply_weak(ctx: WeakFormContext, u: GridFunction, v: GridFunction) -> float:
    """``<(-Delta)^s_M u, v>`` in weak form."""
    ctx.check(u, v)
    t = ctx.table
    return t.weighted_sum(ctx.M.m(t.quotients(u.flat)) * t.quotients(v.flat))


def gradient_full(ctx: WeakFormContext, u: GridFunction) -> np.ndarray:
    """Derivative of ``F`` with respect to every nodal value (boundary included)."""
    ctx.check(u)
    if u.is_zero():
        return np.zeros(ctx.domain.n_nodes)
    return ctx.table.gradient(ctx.M, u.flat)


def gradient_F(ctx: WeakFormContext, u: GridFunction) -> np.ndarray:
    """``<F'(u), phi_i>`` for the interior hat functions, in ``GridFunction.interior`` order."""
    return gradient_full(ctx, u)[ctx.interior_index]


def monotonicity_probe(ctx: WeakFormContext, u: GridFunction, v: GridFunction) -> float:
    """``<F'(u) - F'(v), u - v>``; nonnegative because ``F`` is convex."""
    ctx.check(u, v)
    t = ctx.table
    zu, zv = t.quotients(u.flat), t.quotients(v.flat)
    return t.weighted_sum((ctx.M.m(zu) - ctx.M.m(zv)) * (zu - zv))
