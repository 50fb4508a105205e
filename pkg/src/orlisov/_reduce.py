"""Deterministic blocked reductions.

Row blocks have a fixed size independent of the worker count, partial results
are combined in block order (``math.fsum`` for scalars), so values are
bit-identical whatever ``ORLISOV_THREADS`` is set to.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_ROWS = 1 << 15


def n_threads() -> int:
    raw = os.environ.get("ORLISOV_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = os.cpu_count() or 1
    return max(1, min(cap, os.cpu_count() or 1))


def block_slices(n: int, block: int = BLOCK_ROWS) -> list[slice]:
    return [slice(k, min(k + block, n)) for k in range(0, max(n, 1), block)]


def map_blocks(fn, slices):
    """Apply ``fn`` to each slice, returning results in slice order."""
    workers = n_threads()
    if workers == 1 or len(slices) == 1:
        return [fn(sl) for sl in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, slices))


def fsum_blocks(values: np.ndarray, block: int = BLOCK_ROWS) -> float:
    """Compensated sum of a 1-D array: pairwise inside fixed blocks, fsum across."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        return 0.0
    return math.fsum(float(values[sl].sum()) for sl in block_slices(values.size, block))
