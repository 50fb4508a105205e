"""Uniform meshes and zero-extended piecewise multilinear functions.

A :class:`GridFunction` stores one value per mesh node (boundary included).
Conforming functions carry zeros on the boundary and are read as zero on the
whole complement of the domain; non-conforming nodal data is allowed for
domain-only diagnostics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "Domain", "QuadratureScheme", "GridFunction", "make_grid_function", "evaluate",
    "random_unit_direction", "random_nodal", "fixture", "FIXTURES", "to_csv", "from_csv",
    "write_csv", "read_csv",
]


@dataclass(frozen=True)
class Domain:
    """Interval (``dim=1``) or rectangle (``dim=2``) split into uniform cells."""

    dim: int
    bounds: tuple[tuple[float, float], ...]
    n_cells: tuple[int, ...]
    tail_radius: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        cells = tuple(int(n) for n in self.n_cells)
        if len(bounds) != self.dim or len(cells) != self.dim:
            raise ConfigurationError("bounds and n_cells need one entry per axis")
        if any(not b > a for a, b in bounds):
            raise ConfigurationError(f"degenerate bounds {bounds}")
        if any(n < 2 for n in cells):
            raise ConfigurationError("need at least 2 cells per axis")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "n_cells", cells)
        object.__setattr__(self, "tail_radius", float(self.tail_radius))
        if not self.tail_radius >= self.diameter * (1 - 1e-12):
            raise ConfigurationError(
                f"tail_radius {self.tail_radius} smaller than diameter {self.diameter}")

    @classmethod
    def interval(cls, a: float = 0.0, b: float = 1.0, n: int = 32, tail_radius: float | None = None):
        return cls(1, ((a, b),), (n,), 4.0 * (b - a) if tail_radius is None else tail_radius)

    @classmethod
    def rectangle(cls, bounds=((0.0, 1.0), (0.0, 1.0)), n=(8, 8), tail_radius: float | None = None):
        diam = math.hypot(*(b - a for a, b in bounds))
        return cls(2, tuple(bounds), tuple(n), 4.0 * diam if tail_radius is None else tail_radius)

    @property
    def h(self) -> np.ndarray:
        return np.array([(b - a) / n for (a, b), n in zip(self.bounds, self.n_cells)])

    @property
    def lower(self) -> np.ndarray:
        return np.array([a for a, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b for _, b in self.bounds])

    @property
    def node_shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.n_cells)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def diameter(self) -> float:
        return float(math.hypot(*(b - a for a, b in self.bounds)))

    @property
    def measure(self) -> float:
        return float(np.prod([b - a for a, b in self.bounds]))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, n + 1) for (a, b), n in zip(self.bounds, self.n_cells)]

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``node_shape + (dim,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.node_shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        return mask

    @property
    def n_interior(self) -> int:
        return int(np.prod([n - 1 for n in self.n_cells]))


@dataclass(frozen=True)
class QuadratureScheme:
    """Cell-pair quadrature parameters.

    gauss_order
        Gauss-Legendre points per axis on each (sub)cell.
    diagonal_levels
        Depth of the dyadic grading toward coincident / touching cells and
        toward the boundary.
    tail_rings
        Geometric panels of the radial exterior integral, both inside and
        beyond ``tail_radius``.
    """

    gauss_order: int = 3
    diagonal_levels: int = 6
    tail_rings: int = 8

    def __post_init__(self):
        if self.gauss_order < 2:
            raise ConfigurationError("gauss_order must be >= 2")
        if self.diagonal_levels < 1:
            raise ConfigurationError("diagonal_levels must be >= 1")
        if self.tail_rings < 1:
            raise ConfigurationError("tail_rings must be >= 1")

    @classmethod
    def default(cls, dim: int) -> "QuadratureScheme":
        # 2-D pair rules carry g**4 points per pair; order 2 keeps tables small
        return cls() if dim == 1 else cls(gauss_order=2, diagonal_levels=4, tail_rings=8)

    def refined(self, k: int = 1) -> "QuadratureScheme":
        return QuadratureScheme(self.gauss_order + k, self.diagonal_levels + k, self.tail_rings + k)


class GridFunction:
    """Nodal values of a continuous piecewise (multi)linear function.

    Immutable; arithmetic returns new instances.
    """

    __slots__ = ("domain", "values")

    def __init__(self, domain: Domain, values):
        vals = np.array(values, dtype=float).reshape(domain.node_shape)
        if not np.all(np.isfinite(vals)):
            raise DomainError("non-finite nodal value")
        vals.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def zeros(cls, domain: Domain) -> "GridFunction":
        return cls(domain, np.zeros(domain.node_shape))

    @classmethod
    def from_interior(cls, domain: Domain, interior) -> "GridFunction":
        vals = np.zeros(domain.node_shape)
        vals[domain.interior_mask()] = np.asarray(interior, dtype=float).ravel()
        return cls(domain, vals)

    @property
    def interior(self) -> np.ndarray:
        return self.values[self.domain.interior_mask()]

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def conforming(self) -> bool:
        return not np.any(self.values[~self.domain.interior_mask()])

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def _check(self, other: "GridFunction"):
        if other.domain != self.domain:
            raise ConfigurationError("grid functions live on different domains")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.domain, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.domain, self.values - other.values)

    def __mul__(self, c):
        return GridFunction(self.domain, float(c) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.domain, self.values / float(c))

    def __neg__(self):
        return GridFunction(self.domain, -self.values)

    def __repr__(self):
        return f"GridFunction(dim={self.domain.dim}, cells={self.domain.n_cells}, max|u|={np.abs(self.values).max():.3g})"


def make_grid_function(domain: Domain, rule: Callable | None, *, zero_boundary: bool = True) -> GridFunction:
    """Sample ``rule`` at the nodes.

    ``rule`` receives one coordinate array per axis (``rule(x)`` in 1-D,
    ``rule(x, y)`` in 2-D).  With ``zero_boundary`` the boundary nodes are set
    to 0, producing a conforming function.
    """
    if rule is None:
        return GridFunction.zeros(domain)
    coords = np.meshgrid(*domain.axes(), indexing="ij")
    vals = np.broadcast_to(np.asarray(rule(*coords), dtype=float), domain.node_shape).copy()
    if not np.all(np.isfinite(vals[domain.interior_mask()] if zero_boundary else vals)):
        raise DomainError("rule produced a non-finite nodal value")
    if zero_boundary:
        vals[~domain.interior_mask()] = 0.0
    return GridFunction(domain, vals)


def evaluate(u: GridFunction, x) -> np.ndarray | float:
    """Multilinear interpolation; exactly 0 outside the closed domain.

    ``x`` is a point or an array of points with trailing axis ``dim`` (in 1-D a
    plain array of abscissae also works).
    """
    dom = u.domain
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 0 or (dom.dim > 1 and pts.ndim == 1)
    pts = pts.reshape(-1, dom.dim)
    lo, h = dom.lower, dom.h
    n = np.array(dom.n_cells)
    rel = (pts - lo) / h
    inside = np.all((rel >= 0) & (rel <= n), axis=1)
    cell = np.clip(np.floor(rel).astype(int), 0, n - 1)
    xi = rel - cell
    out = np.zeros(len(pts))
    for corner in np.ndindex(*(2,) * dom.dim):
        c = np.array(corner)
        w = np.prod(np.where(c == 1, xi, 1 - xi), axis=1)
        idx = tuple((cell + c).T)
        out += w * u.values[idx]
    out[~inside] = 0.0
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# fixtures

def _bubble(domain: Domain) -> GridFunction:
    def rule(*xs):
        val = 1.0
        for x, (a, b) in zip(xs, domain.bounds):
            val = val * 4 * (x - a) * (b - x) / (b - a) ** 2
        return val
    return make_grid_function(domain, rule)


def _hat(domain: Domain) -> GridFunction:
    def rule(*xs):
        val = 1.0
        for x, (a, b) in zip(xs, domain.bounds):
            val = val * np.clip(1 - np.abs(2 * (x - a) / (b - a) - 1), 0, None)
        return val
    return make_grid_function(domain, rule)


def _sine(k: int):
    def build(domain: Domain) -> GridFunction:
        def rule(*xs):
            val = 1.0
            for x, (a, b) in zip(xs, domain.bounds):
                val = val * np.sin(k * np.pi * (x - a) / (b - a))
            return val
        return make_grid_function(domain, rule)
    return build


FIXTURES: dict[str, Callable[[Domain], GridFunction]] = {
    "zero": GridFunction.zeros,
    "bubble": _bubble,
    "hat": _hat,
    "sine1": _sine(1),
    "sine2": _sine(2),
    "sine3": _sine(3),
}


def fixture(name: str, domain: Domain) -> GridFunction:
    """Deterministic named test functions (all nonnegative except ``sine2/3``)."""
    try:
        return FIXTURES[name](domain)
    except KeyError:
        raise ConfigurationError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None


def random_nodal(domain: Domain, rng: np.random.Generator) -> GridFunction:
    return GridFunction.from_interior(domain, rng.uniform(-1.0, 1.0, domain.n_interior))


def random_unit_direction(domain: Domain, seed: int, young, s: float, scheme=None,
                          scope: str = "extended") -> GridFunction:
    """Random conforming function rescaled to unit Gagliardo seminorm.

    Nodal values are i.i.d. uniform on ``[-1, 1]`` drawn from ``seed``; an
    all-zero draw moves on to ``seed + 1``.
    """
    from .modular import seminorm_gagliardo

    while True:
        u = random_nodal(domain, np.random.default_rng(seed))
        if not u.is_zero():
            break
        seed += 1
    lux = seminorm_gagliardo(young, u, s, scope=scope, scheme=scheme)
    return u / lux.norm


# ---------------------------------------------------------------------------
# CSV

def to_csv(u: GridFunction) -> str:
    dom = u.domain
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "u"] if dom.dim == 1 else ["x", "y", "u"])
    nodes = dom.nodes().reshape(-1, dom.dim)
    for pt, val in zip(nodes, u.flat):
        w.writerow([format(c, ".17g") for c in pt] + [format(val, ".17g")])
    return buf.getvalue()


def from_csv(text: str, domain: Domain) -> GridFunction:
    """Parse ``to_csv`` output; node coordinates must match ``domain``."""
    rows = list(csv.reader(io.StringIO(text)))
    header = ["x", "u"] if domain.dim == 1 else ["x", "y", "u"]
    if not rows or [c.strip() for c in rows[0]] != header:
        raise ConfigurationError(f"expected header {','.join(header)}")
    data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    if data.shape != (domain.n_nodes, domain.dim + 1):
        raise ConfigurationError(f"CSV has {len(data)} rows, grid has {domain.n_nodes} nodes")
    expected = domain.nodes().reshape(-1, domain.dim)
    if not np.allclose(data[:, :-1], expected, rtol=0, atol=1e-12 * max(1.0, domain.diameter)):
        raise ConfigurationError("CSV node coordinates do not match the grid")
    return GridFunction(domain, data[:, -1])


def write_csv(u: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(to_csv(u))


def read_csv(path, domain: Domain) -> GridFunction:
    with open(path) as fh:
        return from_csv(fh.read(), domain)
