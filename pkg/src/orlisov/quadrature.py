"""Pair quadrature tables for the nonlocal modular and its derivative.

Every discretized double integral is stored as a sparse table of linear
difference quotients::

    F(U) = sum_k W[k] * M((D @ U)[k])

where ``U`` is the full nodal vector and each row of ``D`` evaluates
``(u(x) - u(y)) / |x - y|^s`` at one quadrature pair.  The derivative is then
``D.T @ (W * m(D @ U))``, exact for the discrete functional, and the modular,
the weak operator and the gradient all share one set of nodes.

Rows come from three sources:

* cell pairs inside the domain, grouped by translation class (all pairs with
  the same index offset share reference nodes and weights).  Coincident and
  touching classes are graded dyadically toward the shared set; in 1-D the
  coincident class is reduced exactly to a single integral in ``t = |x-y|``.
* the exterior interaction ``2 int_Omega int_{R^N \\ Omega}``: for fixed ``x``
  and a ray leaving the domain at distance ``r_in`` the radial integral is
  ``(1/s) int_0^1 M(u(x) r_in^{-s} sigma) dsigma / sigma`` with
  ``sigma = (r_in / r)^s``; rows with ``r > tail_radius`` are flagged ``far``.
* nothing else: ``u`` vanishes outside the domain, so exterior-exterior pairs
  contribute 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from ._reduce import block_slices, fsum_blocks, map_blocks
from .errors import ConfigurationError
from .grid import Domain, QuadratureScheme

__all__ = ["gauss01", "PairTable", "CellTable", "pair_table", "cell_table"]

INTERIOR, EXTERIOR_NEAR, EXTERIOR_FAR = 0, 1, 2


@lru_cache(maxsize=None)
def gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _corner_offsets(dim: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=dim)), dtype=int)


def _basis(xi: np.ndarray) -> np.ndarray:
    """Multilinear shape functions at reference points ``xi`` (n, dim) -> (n, 2**dim)."""
    corners = _corner_offsets(xi.shape[1])
    return np.prod(np.where(corners[None, :, :] == 1, xi[:, None, :], 1 - xi[:, None, :]), axis=2)


def _tensor_gauss(lo: np.ndarray, hi: np.ndarray, g: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss01(g)
    dim = lo.size
    pts = np.array(list(itertools.product(x, repeat=dim)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=dim))), axis=1)
    return lo + (hi - lo) * pts, wts * np.prod(hi - lo)


def _dyadic_panels(levels: int, toward_zero: bool = True) -> list[tuple[float, float]]:
    """``[2^-(k+1), 2^-k]`` for k < levels plus ``[0, 2^-levels]`` (mirrored if not toward zero)."""
    panels = [(2.0 ** -(k + 1), 2.0 ** -k) for k in range(levels)] + [(0.0, 2.0 ** -levels)]
    if toward_zero:
        return panels
    return [(1 - b, 1 - a) for a, b in panels]


def _panel_rule(panels, g: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss01(g)
    nodes = np.concatenate([a + (b - a) * x for a, b in panels])
    weights = np.concatenate([(b - a) * w for a, b in panels])
    return nodes, weights


# ---------------------------------------------------------------------------
# templates for cell-pair classes

def _touch(plo, phi, qlo, qhi, eps=1e-12) -> bool:
    return bool(np.all(plo <= qhi + eps) and np.all(qlo <= phi + eps))


def _children(lo, hi):
    mid = 0.5 * (lo + hi)
    for c in itertools.product((0, 1), repeat=lo.size):
        c = np.array(c)
        yield np.where(c == 0, lo, mid), np.where(c == 0, mid, hi)


def _graded_leaves(offset: np.ndarray, depth: int):
    """Leaf sub-box pairs of ``[0,1] x (offset + [0,1])`` graded toward the shared point (1-D)."""
    leaves = []

    def rec(plo, phi, qlo, qhi, d):
        if not _touch(plo, phi, qlo, qhi) or d == 0:
            leaves.append((plo, phi, qlo, qhi))
        else:
            for cp in _children(plo, phi):
                for cq in _children(qlo, qhi):
                    rec(*cp, *cq, d - 1)

    rec(np.zeros(1), np.ones(1), offset.astype(float), offset + 1.0, depth)
    return leaves


def _box_template(leaves, offset, g):
    xis, etas, ws = [], [], []
    for plo, phi, qlo, qhi in leaves:
        xp, wp = _tensor_gauss(plo, phi, g)
        xq, wq = _tensor_gauss(qlo - offset, qhi - offset, g)
        xis.append(np.repeat(xp, len(xq), axis=0))
        etas.append(np.tile(xq, (len(xp), 1)))
        ws.append(np.outer(wp, wq).ravel())
    return np.concatenate(xis), np.concatenate(etas), np.concatenate(ws)


def _relative_template(offset: np.ndarray, g: int, levels: int):
    """2-D coincident/touching class in the relative variable ``z = x - y``.

    ``int_P int_Q f = int_z int_{P cap (Q + z)} f dx dz``; the z-box splits at
    ``z = -offset`` into rectangles on which the overlap length is affine.
    Rectangles with a corner at the singular point ``z = 0`` are mapped by two
    Duffy triangles graded dyadically toward 0.
    """
    gx, gw = gauss01(g)
    rx, rw = _panel_rule(_dyadic_panels(levels), g)
    zs, wzs = [], []
    ivals = [[(-d - 1.0, -float(d)), (-float(d), -d + 1.0)] for d in offset]
    for I in ivals[0]:
        for J in ivals[1]:
            if 0.0 in I and 0.0 in J:
                c = np.array([I[0] if I[1] == 0 else I[1], J[0] if J[1] == 0 else J[1]])
                for A, B in (((c[0], 0.0), c), (c, (0.0, c[1]))):
                    A, B = np.asarray(A), np.asarray(B)
                    z = rx[:, None, None] * (A + gx[None, :, None] * (B - A))
                    zs.append(z.reshape(-1, 2))
                    wzs.append((abs(c[0] * c[1]) * np.outer(rx * rw, gw)).ravel())
            else:
                z, w = _tensor_gauss(np.array([I[0], J[0]]), np.array([I[1], J[1]]), g)
                zs.append(z)
                wzs.append(w)
    z, wz = np.concatenate(zs), np.concatenate(wzs)
    lo = np.maximum(0.0, offset + z)
    hi = np.minimum(1.0, offset + 1.0 + z)
    px, pw = _tensor_gauss(np.zeros(2), np.ones(2), g)
    xi = (lo[:, None, :] + (hi - lo)[:, None, :] * px[None, :, :]).reshape(-1, 2)
    w = (wz * np.prod(hi - lo, axis=1))[:, None] * pw[None, :]
    eta = xi - np.repeat(z, len(px), axis=0) - offset
    return xi, eta, w.ravel()


def _class_template(offset: np.ndarray, g: int, depth: int):
    """Reference nodes for one translation class: (xi, eta, wref)."""
    touching = bool(np.all(np.abs(offset) <= 1))
    if touching and offset.size == 2:
        return _relative_template(offset, g, depth)
    if touching:
        return _box_template(_graded_leaves(offset, depth), offset, g)
    return _box_template([(np.zeros(offset.size), np.ones(offset.size),
                           offset.astype(float), offset + 1.0)], offset, g)


def _cell_ranges(n_cells, offset):
    """Cells ``i`` such that ``i + offset`` is also a cell."""
    rngs = [np.arange(max(0, -d), n - max(0, d)) for n, d in zip(n_cells, offset)]
    grids = np.meshgrid(*rngs, indexing="ij")
    return np.stack([gr.ravel() for gr in grids], axis=1)


def _corner_nodes(domain: Domain, cells: np.ndarray) -> np.ndarray:
    """Flat node ids of the 2**dim corners of each cell, shape (n_cells, 2**dim)."""
    corners = _corner_offsets(domain.dim)
    idx = cells[:, None, :] + corners[None, :, :]
    return np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), domain.node_shape)


class _RowBuilder:
    def __init__(self):
        self.rows, self.cols, self.vals, self.W, self.kind = [], [], [], [], []
        self.n = 0

    def add(self, cols: np.ndarray, vals: np.ndarray, W: np.ndarray, kind: int):
        """``cols``/``vals`` of shape (n_rows, k)."""
        nr, k = cols.shape
        self.rows.append(np.repeat(np.arange(self.n, self.n + nr), k))
        self.cols.append(cols.ravel())
        self.vals.append(vals.ravel())
        self.W.append(W)
        self.kind.append(np.full(nr, kind, dtype=np.int8))
        self.n += nr

    def build(self, n_nodes: int):
        mat = sparse.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n, n_nodes)).tocsr()
        mat.sum_duplicates()
        return mat, np.concatenate(self.W), np.concatenate(self.kind)


def _interior_rows(builder: _RowBuilder, domain: Domain, scheme: QuadratureScheme, s: float):
    dim, h = domain.dim, domain.h
    vol = float(np.prod(h))
    g, K = scheme.gauss_order, scheme.diagonal_levels
    n_cells = domain.n_cells

    # coincident cells
    cells = _cell_ranges(n_cells, np.zeros(dim, dtype=int))
    nodes = _corner_nodes(domain, cells)
    if dim == 1:
        # u(x) - u(y) = slope * (x - y) on one cell: int int f(x-y) = 2 int_0^h (h-t) f(t) dt
        tau, wt = _panel_rule(_dyadic_panels(K), g)
        hh = float(h[0])
        t = hh * tau
        coef = t ** (1 - s) / hh
        W = 2 * hh * (1 - tau) * wt / tau
        nc = len(cells)
        builder.add(np.repeat(nodes, len(t), axis=0),
                    np.tile(np.stack([-coef, coef], axis=1), (nc, 1)),
                    np.tile(W, nc), INTERIOR)
    else:
        _add_class(builder, domain, np.zeros(dim, dtype=int), cells, nodes, s, g, K, vol, factor=1.0)

    # distinct cells, each unordered pair once with weight 2
    for off in itertools.product(*[range(-(n - 1), n) for n in n_cells]):
        off = np.array(off)
        nz = np.nonzero(off)[0]
        if nz.size == 0 or off[nz[0]] < 0:
            continue
        cells = _cell_ranges(n_cells, off)
        _add_class(builder, domain, off, cells, _corner_nodes(domain, cells), s, g, K, vol, factor=2.0,
                   q_nodes=_corner_nodes(domain, cells + off))


def _add_class(builder, domain, off, cells, p_nodes, s, g, K, vol, factor, q_nodes=None):
    if q_nodes is None:
        q_nodes = p_nodes
    xi, eta, wref = _class_template(off, g, K)
    diff = (xi - (eta + off)) * domain.h
    r = np.sqrt(np.sum(diff * diff, axis=1))
    inv = r ** -s
    coef = np.concatenate([_basis(xi) * inv[:, None], -_basis(eta) * inv[:, None]], axis=1)
    W = factor * wref * vol * vol / r ** domain.dim
    npair, nt = len(cells), len(r)
    cols = np.concatenate([np.repeat(p_nodes, nt, axis=0), np.repeat(q_nodes, nt, axis=0)], axis=1)
    builder.add(cols, np.tile(coef, (npair, 1)), np.tile(W, npair), INTERIOR)


def _omega_points(domain: Domain, scheme: QuadratureScheme):
    """Gauss points of every cell (1-D boundary cells graded toward the boundary).

    Returns (cell index array, reference coords, weights with cell volume).
    """
    dim, g, K = domain.dim, scheme.gauss_order, scheme.diagonal_levels
    vol = float(np.prod(domain.h))
    cells_all = _cell_ranges(domain.n_cells, np.zeros(dim, dtype=int))
    cell_ids, refs, wts = [], [], []
    if dim == 1:
        n = domain.n_cells[0]
        plain = gauss01(g)
        left = _panel_rule(_dyadic_panels(K, toward_zero=True), g)
        right = _panel_rule(_dyadic_panels(K, toward_zero=False), g)
        for i in range(n):
            x, w = left if i == 0 else right if i == n - 1 else plain
            cell_ids.append(np.full(len(x), i))
            refs.append(x[:, None])
            wts.append(w * vol)
        cells = np.concatenate(cell_ids)[:, None]
        return cells, np.concatenate(refs), np.concatenate(wts)
    xr, wr = _tensor_gauss(np.zeros(dim), np.ones(dim), g)
    cells = np.repeat(cells_all, len(xr), axis=0)
    return cells, np.tile(xr, (len(cells_all), 1)), np.tile(wr * vol, len(cells_all))


def _exit_directions(domain: Domain, x: np.ndarray, n_theta: int):
    """Exit distances and angular weights of rays from interior points ``x`` (n, dim).

    Returns arrays (n, n_dir) of ``r_in`` and weights.  In 1-D the two rays
    carry unit weight; in 2-D the circle is split at the four corner angles
    and each panel integrated by Gauss-Legendre.
    """
    lo, hi = domain.lower, domain.upper
    if domain.dim == 1:
        r = np.stack([x[:, 0] - lo[0], hi[0] - x[:, 0]], axis=1)
        return r, np.ones_like(r)
    corners = np.array([[hi[0], hi[1]], [lo[0], hi[1]], [lo[0], lo[1]], [hi[0], lo[1]]])
    ang = np.arctan2(corners[None, :, 1] - x[:, None, 1], corners[None, :, 0] - x[:, None, 0])
    ang = np.mod(ang - ang[:, :1], 2 * np.pi) + ang[:, :1]   # increasing from the first corner
    ang = np.concatenate([ang, ang[:, :1] + 2 * np.pi], axis=1)
    gx, gw = np.polynomial.legendre.leggauss(n_theta)
    dist = np.stack([hi[1] - x[:, 1], x[:, 0] - lo[0], x[:, 1] - lo[1], hi[0] - x[:, 0]], axis=1)
    normal = np.array([0.5 * np.pi, np.pi, 1.5 * np.pi, 0.0])
    rs, ws = [], []
    for k in range(4):
        a, b = ang[:, k], ang[:, k + 1]
        theta = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * gx[None, :]
        # the panel between corner k and k+1 exits through edge k (top, left, bottom, right)
        c = np.cos(theta - normal[k])
        rs.append(dist[:, k:k + 1] / c)
        ws.append(0.5 * (b - a)[:, None] * gw[None, :])
    return np.concatenate(rs, axis=1), np.concatenate(ws, axis=1)


def _exterior_rows(builder: _RowBuilder, domain: Domain, scheme: QuadratureScheme, s: float):
    g, T = scheme.gauss_order, scheme.tail_rings
    cells, ref, wx = _omega_points(domain, scheme)
    x = domain.lower + (cells + ref) * domain.h
    r_in, w_dir = _exit_directions(domain, x, 2 * g + 2)
    n_pts, n_dir = r_in.shape
    if np.any(r_in > domain.tail_radius * (1 + 1e-12)):
        raise ConfigurationError("tail_radius must cover every exit distance")

    gx, gw = gauss01(g)
    sig_R = (np.minimum(r_in / domain.tail_radius, 1.0)) ** s      # (n_pts, n_dir)
    # near: geometric panels on [sig_R, 1]; far: dyadic panels on [0, sig_R]
    k = np.arange(T + 1)
    near_edges = sig_R[..., None] ** (k / T)[::-1]                    # sig_R ... 1
    far_edges = np.concatenate([np.zeros_like(sig_R)[..., None],
                                sig_R[..., None] * 2.0 ** -np.arange(T, -1, -1)], axis=-1)

    def nodes_of(edges):
        a, b = edges[..., :-1, None], edges[..., 1:, None]
        sig = (a + (b - a) * gx).reshape(n_pts, n_dir, -1)
        wsig = ((b - a) * gw).reshape(n_pts, n_dir, -1)
        return sig, wsig

    basis = _basis(ref)                                            # (n_pts, 2**dim)
    nodes = _corner_nodes(domain, cells)                           # (n_pts, 2**dim)
    for edges, kind in ((near_edges, EXTERIOR_NEAR), (far_edges, EXTERIOR_FAR)):
        sig, wsig = nodes_of(edges)
        scale = (r_in[..., None] ** -s) * sig                         # (n_pts, n_dir, ns)
        coef = basis[:, None, None, :] * scale[..., None]
        W = 2 * wx[:, None, None] * w_dir[..., None] * wsig / (s * sig)
        cols = np.broadcast_to(nodes[:, None, None, :], coef.shape)
        nb = coef.shape[-1]
        builder.add(cols.reshape(-1, nb), coef.reshape(-1, nb), W.ravel(), kind)


@dataclass(frozen=True, eq=False)
class PairTable:
    """Sparse difference-quotient rows ``D`` with positive weights ``W``."""

    D: sparse.csr_matrix
    W: np.ndarray
    kind: np.ndarray
    n_nodes: int

    def __post_init__(self):
        blocks = block_slices(self.D.shape[0])
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "D_blocks", [self.D[sl] for sl in blocks])
        object.__setattr__(self, "DT_blocks", [self.D[sl].T.tocsr() for sl in blocks])

    @property
    def n_rows(self) -> int:
        return self.D.shape[0]

    def quotients(self, U: np.ndarray) -> np.ndarray:
        parts = map_blocks(lambda k: self.D_blocks[k] @ U, list(range(len(self.blocks))))
        return np.concatenate(parts)

    def weighted_sum(self, vals: np.ndarray, mask: np.ndarray | None = None) -> float:
        """Block-compensated ``sum(W * vals)`` (optionally restricted to ``mask``)."""
        terms = self.W * vals
        if mask is not None:
            terms = np.where(mask, terms, 0.0)
        return fsum_blocks(terms)

    def modular(self, M, U: np.ndarray) -> float:
        def part(k):
            sl = self.blocks[k]
            return float(np.sum(self.W[sl] * M.M(self.D_blocks[k] @ U)))
        return math.fsum(map_blocks(part, list(range(len(self.blocks)))))

    def covector(self, rowvals: np.ndarray) -> np.ndarray:
        """``D.T @ (W * rowvals)`` accumulated block by block in fixed order."""
        def part(k):
            sl = self.blocks[k]
            return self.DT_blocks[k] @ (self.W[sl] * rowvals[sl])
        out = np.zeros(self.n_nodes)
        for p in map_blocks(part, list(range(len(self.blocks)))):
            out += p
        return out

    def value_and_gradient(self, M, U: np.ndarray) -> tuple[float, np.ndarray]:
        """``F(U)`` and ``D.T @ (W * m(D U))`` from a single quotient pass."""
        def part(k):
            sl = self.blocks[k]
            z = self.D_blocks[k] @ U
            return float(np.sum(self.W[sl] * M.M(z))), self.DT_blocks[k] @ (self.W[sl] * M.m(z))
        parts = map_blocks(part, list(range(len(self.blocks))))
        out = np.zeros(self.n_nodes)
        for _, gpart in parts:
            out += gpart
        return math.fsum(v for v, _ in parts), out

    def gradient(self, M, U: np.ndarray) -> np.ndarray:
        def part(k):
            sl = self.blocks[k]
            return self.DT_blocks[k] @ (self.W[sl] * M.m(self.D_blocks[k] @ U))
        out = np.zeros(self.n_nodes)
        for p in map_blocks(part, list(range(len(self.blocks)))):
            out += p
        return out


@lru_cache(maxsize=64)
def pair_table(domain: Domain, scheme: QuadratureScheme, s: float, scope: str = "extended") -> PairTable:
    """Build (and cache) the quadrature table for ``scope`` in {"domain", "extended"}."""
    if not 0 < s < 1:
        raise ConfigurationError(f"s must lie in (0, 1), got {s}")
    if scope not in ("domain", "extended"):
        raise ConfigurationError(f"unknown scope {scope!r}")
    builder = _RowBuilder()
    _interior_rows(builder, domain, scheme, s)
    if scope == "extended":
        _exterior_rows(builder, domain, scheme, s)
    D, W, kind = builder.build(domain.n_nodes)
    return PairTable(D, W, kind, domain.n_nodes)


@dataclass(frozen=True, eq=False)
class CellTable:
    """Gauss rule on the cells: ``int_Omega f(x, u(x)) dx ~ sum w f(x_k, (B U)_k)``."""

    B: sparse.csr_matrix
    w: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "BT", self.B.T.tocsr())

    def integrate(self, vals: np.ndarray) -> float:
        return fsum_blocks(self.w * vals)

    def load(self, vals: np.ndarray) -> np.ndarray:
        return self.BT @ (self.w * vals)


@lru_cache(maxsize=64)
def cell_table(domain: Domain, scheme: QuadratureScheme) -> CellTable:
    dim = domain.dim
    cells = _cell_ranges(domain.n_cells, np.zeros(dim, dtype=int))
    xr, wr = _tensor_gauss(np.zeros(dim), np.ones(dim), scheme.gauss_order)
    nodes = _corner_nodes(domain, cells)
    basis = _basis(xr)
    n_c, n_q = len(cells), len(xr)
    rows = np.repeat(np.arange(n_c * n_q), 2 ** dim)
    cols = np.repeat(nodes, n_q, axis=0).ravel()
    vals = np.tile(basis, (n_c, 1)).ravel()
    B = sparse.csr_matrix((vals, (rows, cols)), shape=(n_c * n_q, domain.n_nodes))
    w = np.tile(wr, n_c) * float(np.prod(domain.h))
    pts = domain.lower + (np.repeat(cells, n_q, axis=0) + np.tile(xr, (n_c, 1))) * domain.h
    return CellTable(B, w, pts)
