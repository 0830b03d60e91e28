"""Shift tuples, local densities nu_p, and the singular series.

The Euler product is split in two: primes up to the largest pairwise
difference are multiplied exactly as fractions, and the smooth remainder up to
``p_max`` is accumulated in floating point. Primes beyond ``p_max`` are covered
by a certified bound on the log of the omitted tail.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .arith import small_primes

DEFAULT_P_MAX = 10**6
DEFAULT_H_BOUND = 10**7


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class TupleSet:
    """A finite set of distinct non-negative shifts, kept sorted."""

    shifts: tuple[int, ...]

    def __init__(self, shifts: Iterable[int] = (), h_bound: int = DEFAULT_H_BOUND):
        vals = [int(s) for s in shifts]
        if len(set(vals)) != len(vals):
            raise ValueError(f"duplicate shifts in {vals}")
        if any(v < 0 or v > h_bound for v in vals):
            raise ValueError(f"shifts must lie in [0, {h_bound}]")
        object.__setattr__(self, "shifts", tuple(sorted(vals)))

    @classmethod
    def parse(cls, text: str) -> "TupleSet":
        """Read ``"0,2,6"``; an empty string is the empty tuple."""
        text = text.strip()
        return cls(int(t) for t in text.split(",") if t.strip()) if text else cls()

    @property
    def k(self) -> int:
        return len(self.shifts)

    def __len__(self) -> int:
        return len(self.shifts)

    def __iter__(self):
        return iter(self.shifts)

    def __contains__(self, h: object) -> bool:
        return h in self.shifts

    def __or__(self, other: "TupleSet") -> "TupleSet":
        return TupleSet(set(self.shifts) | set(other.shifts))

    def __and__(self, other: "TupleSet") -> "TupleSet":
        return TupleSet(set(self.shifts) & set(other.shifts))

    def shifted(self, c: int) -> "TupleSet":
        return TupleSet(s + c for s in self.shifts)

    @property
    def max_diff(self) -> int:
        return self.shifts[-1] - self.shifts[0] if self.shifts else 0

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.shifts)) + "}"


@dataclass(frozen=True)
class SingularSeriesResult:
    value: float
    exact_prefix: Fraction
    tail_log_bound: float
    p_max: int


def nu_p(H: TupleSet, p: int) -> int:
    """Number of residue classes mod ``p`` occupied by ``H``."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    return len({h % p for h in H})


def is_admissible(H: TupleSet) -> bool:
    # only primes p <= k can have every class covered
    return all(nu_p(H, p) < p for p in range(2, H.k + 1) if is_prime(p))


@lru_cache(maxsize=8)
def _primes_upto(p_max: int) -> np.ndarray:
    return small_primes(p_max)


@lru_cache(maxsize=64)
def _log_factor_prefix(k: int, p_max: int) -> tuple[np.ndarray, list[float]]:
    """Compensated prefix sums of log((1-1/p)^-k (1-k/p)) over primes p > k."""
    primes = _primes_upto(p_max)
    primes = primes[primes > k]
    terms = (-k * np.log1p(-1.0 / primes) + np.log1p(-k / primes)).tolist()
    prefix = [0.0]
    s = c = 0.0
    for t in terms:
        y = s + t
        if abs(s) >= abs(t):
            c += (s - y) + t
        else:
            c += (t - y) + s
        s = y
        prefix.append(s + c)
    return primes, prefix


def tail_log_bound(k: int, p_max: int) -> float:
    """Bound on |log| of the product over primes p > p_max (needs p_max >= 2k)."""
    if k <= 1:
        return 0.0
    return 2.0 * k * k / (p_max * math.log(p_max))


def singular_series(H: TupleSet, p_max: int = DEFAULT_P_MAX) -> SingularSeriesResult:
    k = H.k
    if k == 0:
        return SingularSeriesResult(1.0, Fraction(1), 0.0, p_max)
    if p_max < H.max_diff or p_max < 2 * k:
        raise ValueError(
            f"p_max={p_max} below required minimum max({H.max_diff}, {2 * k})"
        )
    p_split = max(H.max_diff, k)
    exact = Fraction(1)
    all_primes = _primes_upto(p_max)
    for p in all_primes[: int(np.searchsorted(all_primes, p_split, side="right"))].tolist():
        nu = len({h % p for h in H})
        if nu == p:
            return SingularSeriesResult(0.0, Fraction(0), 0.0, p_max)
        exact *= Fraction(p, p - 1) ** k * Fraction(p - nu, p)

    primes, prefix = _log_factor_prefix(k, p_max)
    i = int(np.searchsorted(primes, p_split, side="right"))
    log_tail = prefix[-1] - prefix[i]
    return SingularSeriesResult(
        float(exact) * math.exp(log_tail), exact, tail_log_bound(k, p_max), p_max
    )


def delta_product(H: TupleSet) -> int:
    """Product of |h_j - h_i| over all pairs i < j."""
    if H.k < 2:
        raise ValueError("need at least two shifts")
    return math.prod(b - a for a, b in itertools.combinations(H.shifts, 2))


def gallagher_average(k: int, h: int, p_max: int = DEFAULT_P_MAX) -> float:
    """Sum of the singular series over ordered k-tuples of distinct shifts in [1, h].

    Each unordered set is evaluated once (translated to start at 0) and
    weighted by its k! orderings.
    """
    if k < 1 or h < k:
        raise ValueError("need k >= 1 and h >= k")
    p_max = max(p_max, h, 2 * k)
    memo: dict[tuple[int, ...], float] = {}
    parts = []
    for combo in itertools.combinations(range(1, h + 1), k):
        key = tuple(c - combo[0] for c in combo)
        val = memo.get(key)
        if val is None:
            val = memo[key] = singular_series(TupleSet(key), p_max).value
        parts.append(val)
    return math.factorial(k) * math.fsum(parts)


def subset_parity_identity(H: TupleSet, p: int) -> int:
    """Sum of (-1)^|v| over index subsets v, |v| >= 2, whose shifts agree mod p.

    Brute force; the closed form is ``len(H) - nu_p(H, p)``.
    """
    total = 0
    for size in range(2, H.k + 1):
        for sub in itertools.combinations(H.shifts, size):
            if all((s - sub[0]) % p == 0 for s in sub):
                total += (-1) ** size
    return total
