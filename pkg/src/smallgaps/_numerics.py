"""Summation helpers shared by the sieving and correlation code."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

_BLOCK = 1 << 14
DEFAULT_CHUNK = 1 << 20


def accurate_sum(values: np.ndarray) -> float:
    """Sum a float array with error tracking across blocks.

    Each block is reduced pairwise by numpy; the block totals are then
    combined with ``math.fsum`` so the cross-block error is exactly rounded.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    n = values.size
    if n == 0:
        return 0.0
    full = n - n % _BLOCK
    parts = []
    if full:
        parts.extend(values[:full].reshape(-1, _BLOCK).sum(axis=1).tolist())
    if full < n:
        parts.append(float(values[full:].sum()))
    return math.fsum(parts)


def chunked_reduce(
    lo: int,
    hi: int,
    fn: Callable[[int, int], float],
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> float:
    """Evaluate ``fn(a, b)`` on consecutive pieces of ``[lo, hi)`` and add them up.

    The partition depends only on ``chunk``, and the partial sums are combined
    in range order with ``math.fsum``, so the result does not depend on
    ``threads``.
    """
    if hi <= lo:
        return 0.0
    bounds = [(a, min(a + chunk, hi)) for a in range(lo, hi, chunk)]
    if threads <= 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return math.fsum(parts)
