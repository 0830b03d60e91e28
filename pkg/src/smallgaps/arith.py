"""Windowed tables of multiplicative functions built from a segmented sieve.

A window covers the half-open integer range ``[window_start, window_start +
window_len)``. The smallest-prime-factor array is what gets sieved and cached;
the Moebius and von Mangoldt arrays are derived from it.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from ._numerics import accurate_sum

log = logging.getLogger(__name__)

DEFAULT_MAX_LEN = 60_000_000

CACHE_MAGIC = b"PGL1"
_HEADER = struct.Struct("<4sQQ")


class CapacityError(ValueError):
    """Requested window exceeds the configured memory budget."""


class WindowError(IndexError):
    """A query falls outside the integers covered by a table."""


class CacheError(ValueError):
    """A cache file is missing, truncated or inconsistent."""


def small_primes(limit: int) -> np.ndarray:
    """Primes ``<= limit`` by a plain sieve of Eratosthenes."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _first_multiple(p: int, start: int) -> int:
    return -(-start // p) * p


@dataclass(eq=False)
class ArithTable:
    window_start: int
    window_len: int
    spf: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    is_prime: np.ndarray
    _base_primes: np.ndarray = field(repr=False, default=None)

    @property
    def window_end(self) -> int:
        """One past the last covered integer."""
        return self.window_start + self.window_len

    @property
    def numbers(self) -> np.ndarray:
        return np.arange(self.window_start, self.window_end, dtype=np.int64)

    def covers(self, lo: int, hi: int) -> bool:
        """True when every integer in ``[lo, hi)`` is tabulated."""
        return hi <= lo or (self.window_start <= lo and hi <= self.window_end)

    def require(self, lo: int, hi: int) -> None:
        if not self.covers(lo, hi):
            raise WindowError(
                f"[{lo}, {hi}) not inside window [{self.window_start}, {self.window_end})"
            )

    def view(self, name: str, lo: int, hi: int) -> np.ndarray:
        """Slice of array ``name`` for the integers ``lo <= n < hi``."""
        self.require(lo, hi)
        a = lo - self.window_start
        return getattr(self, name)[a : a + (hi - lo)]

    def __getitem__(self, n: int) -> tuple[int, float]:
        self.require(n, n + 1)
        i = n - self.window_start
        return int(self.mu[i]), float(self.lam[i])

    @cached_property
    def _cofactor_tables(self) -> tuple[np.ndarray, np.ndarray]:
        start, hi = self.window_start, self.window_end
        n = self.numbers
        rem = n.copy()
        d = np.ones_like(n)
        phi = n.copy()
        for p in self._base_primes.tolist():
            s = _first_multiple(p, start)
            if s >= hi:
                continue
            phi[s - start :: p] = phi[s - start :: p] // p * (p - 1)
            pk, j = p, 1
            while pk < hi:
                s = _first_multiple(pk, start)
                if s >= hi:
                    break
                sl = slice(s - start, None, pk)
                rem[sl] //= p
                d[sl] = d[sl] // j * (j + 1)
                j += 1
                pk *= p
        big = rem > 1
        d[big] *= 2
        phi[big] = phi[big] // rem[big] * (rem[big] - 1)
        return d, phi

    @property
    def divisor_count(self) -> np.ndarray:
        """d(n) over the window."""
        return self._cofactor_tables[0]

    @property
    def totient(self) -> np.ndarray:
        """Euler phi(n) over the window."""
        return self._cofactor_tables[1]


def _sieve_spf(start: int, hi: int, base: np.ndarray) -> np.ndarray:
    spf = np.zeros(hi - start, dtype=np.int64)
    for p in base.tolist():
        s = max(p * p, _first_multiple(p, start))
        if s >= hi:
            continue
        sl = spf[s - start :: p]
        sl[sl == 0] = p
    n = np.arange(start, hi, dtype=np.int64)
    unset = spf == 0
    spf[unset] = n[unset]
    return spf


def _derive(start: int, spf: np.ndarray, base: np.ndarray) -> ArithTable:
    hi = start + spf.size
    n = np.arange(start, hi, dtype=np.int64)
    is_prime = (spf == n) & (n >= 2)

    lam = np.zeros(spf.size, dtype=np.float64)
    lam[is_prime] = np.log(n[is_prime].astype(np.float64))
    # composite prime powers: strip the smallest prime until something else shows up
    cand = np.flatnonzero((spf < n) & (n % (spf * spf) == 0))
    rem = n[cand] // spf[cand]
    p = spf[cand]
    while cand.size:
        rem //= p
        done = rem == 1
        hit = cand[done]
        lam[hit] = np.log(spf[hit].astype(np.float64))
        keep = (~done) & (rem % p == 0)
        cand, rem, p = cand[keep], rem[keep], p[keep]

    mu = np.ones(spf.size, dtype=np.int8)
    prod = np.ones(spf.size, dtype=np.int64)
    for q in base.tolist():
        s = _first_multiple(q, start)
        if s >= hi:
            continue
        mu[s - start :: q] *= -1
        prod[s - start :: q] *= q
        s2 = _first_multiple(q * q, start)
        if s2 < hi:
            mu[s2 - start :: q * q] = 0
    # one prime factor above sqrt(hi) is left over wherever prod != n
    mu[prod != n] *= -1

    return ArithTable(start, spf.size, spf, mu, lam, is_prime, base)


def _check_window(window_start: int, window_len: int, max_len: int) -> None:
    if window_start < 1 or window_len < 1:
        raise ValueError("window_start and window_len must be >= 1")
    if window_len > max_len:
        raise CapacityError(f"window_len {window_len} exceeds budget {max_len}")


def build_tables(
    window_start: int, window_len: int, max_len: int = DEFAULT_MAX_LEN
) -> ArithTable:
    """Sieve ``[window_start, window_start + window_len)``."""
    _check_window(window_start, window_len, max_len)
    hi = window_start + window_len
    base = small_primes(math.isqrt(hi - 1))
    spf = _sieve_spf(window_start, hi, base)
    return _derive(window_start, spf, base)


def psi(x: int, table: ArithTable) -> float:
    """Chebyshev psi(x), the sum of Lambda(n) over n <= x."""
    if table.window_start != 1:
        raise WindowError("psi needs a table starting at 1")
    if x < 1:
        return 0.0
    table.require(1, x + 1)
    # exactly rounded, so psi is monotone in x even in the last bit
    return math.fsum(table.lam[:x].tolist())


def psi_interval(n: int, h: int, table: ArithTable) -> float:
    """psi(n + h) - psi(n): Lambda summed over the half-open interval (n, n + h]."""
    if h < 0:
        raise ValueError("h must be >= 0")
    if h == 0:
        return 0.0
    return accurate_sum(table.view("lam", n + 1, n + h + 1))


def short_interval_psi(table: ArithTable, lo: int, hi: int, h: int) -> np.ndarray:
    """psi(n, h) for every n in ``[lo, hi)``, as an array.

    Built by adding ``h`` shifted copies of Lambda, so each entry is a sum of
    at most ``h`` terms rather than a difference of large prefix sums.
    """
    out = np.zeros(hi - lo, dtype=np.float64)
    if h <= 0:
        return out
    lam = table.view("lam", lo + 1, hi + h)
    m = hi - lo
    for j in range(h):
        out += lam[j : j + m]
    return out


# --- binary cache ---------------------------------------------------------


def save_table(table: ArithTable, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, table.window_start, table.window_len))
        fh.write(table.spf.astype("<u8").tobytes())
    tmp.replace(path)
    return path


def load_table(path: str | Path) -> ArithTable:
    """Read a cached spf window and recompute the derived arrays."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CacheError(str(exc)) from exc
    if len(raw) < _HEADER.size:
        raise CacheError(f"{path}: truncated header")
    magic, start, length = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise CacheError(f"{path}: bad magic {magic!r}")
    if start < 1 or length < 1 or len(raw) != _HEADER.size + 8 * length:
        raise CacheError(f"{path}: size does not match header")
    spf = np.frombuffer(raw, dtype="<u8", offset=_HEADER.size).astype(np.int64)
    n = np.arange(start, start + length, dtype=np.int64)
    ok = (spf >= 1) & (spf <= n) & (n % np.maximum(spf, 1) == 0)
    ok &= (spf >= 2) | (n == 1)
    ok &= (spf == n) | (spf * spf <= n)
    if not ok.all():
        raise CacheError(f"{path}: inconsistent spf entries")
    base = small_primes(math.isqrt(start + length - 1))
    return _derive(start, spf, base)


def cache_path(cache_dir: str | Path, window_start: int, window_len: int) -> Path:
    return Path(cache_dir) / f"spf_{window_start}_{window_len}.pgl"


def cached_tables(
    window_start: int,
    window_len: int,
    cache_dir: str | Path | None = None,
    max_len: int = DEFAULT_MAX_LEN,
) -> ArithTable:
    """``build_tables`` backed by the on-disk cache when ``cache_dir`` is set.

    A corrupt cache file is logged and rebuilt.
    """
    if cache_dir is None:
        return build_tables(window_start, window_len, max_len)
    _check_window(window_start, window_len, max_len)
    path = cache_path(cache_dir, window_start, window_len)
    if path.exists():
        try:
            return load_table(path)
        except CacheError as exc:
            log.warning("rebuilding corrupt cache %s (%s)", path, exc)
    table = build_tables(window_start, window_len, max_len)
    save_table(table, path)
    return table
