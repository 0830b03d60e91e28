"""Truncated divisor sums Lambda_R(n) and their tuple / moment extensions."""

from __future__ import annotations

import itertools
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._numerics import accurate_sum
from .arith import CacheError, CapacityError, WindowError, build_tables
from .poisson import stirling2
from .tuples import TupleSet

log = logging.getLogger(__name__)

DEFAULT_MAX_R = 10**7
DEFAULT_MAX_LEN = 60_000_000
K_CAP = 8

CACHE_MAGIC = b"PGLR"
_HEADER = struct.Struct("<4sQQd")


def _factor(n: int) -> list[int]:
    """Distinct prime factors of n by trial division."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def lambda_r(n: int, R: float) -> float:
    """Lambda_R(n) = sum over d | n, d <= R of mu(d) log(R/d), by direct enumeration.

    Only squarefree divisors contribute, so we run over subsets of the
    distinct prime factors of ``n``.
    """
    if n < 1 or R < 2:
        raise ValueError("need n >= 1 and R >= 2")
    cut = math.floor(R)
    primes = _factor(n)
    terms = []
    for size in range(len(primes) + 1):
        for combo in itertools.combinations(primes, size):
            d = math.prod(combo)
            if d <= cut:
                terms.append((-1) ** size * math.log(R / d))
    return math.fsum(terms)


@dataclass(eq=False)
class LambdaRWindow:
    R: float
    window_start: int
    window_len: int
    values: np.ndarray

    @property
    def window_end(self) -> int:
        return self.window_start + self.window_len

    @property
    def log_R(self) -> float:
        return math.log(self.R)

    def covers(self, lo: int, hi: int) -> bool:
        return hi <= lo or (self.window_start <= lo and hi <= self.window_end)

    def view(self, lo: int, hi: int) -> np.ndarray:
        """Lambda_R(n) for ``lo <= n < hi``."""
        if not self.covers(lo, hi):
            raise WindowError(
                f"[{lo}, {hi}) not inside window [{self.window_start}, {self.window_end})"
            )
        a = lo - self.window_start
        return self.values[a : a + (hi - lo)]

    def __getitem__(self, n: int) -> float:
        return float(self.view(n, n + 1)[0])


def build_lambda_r_window(
    window_start: int,
    window_len: int,
    R: float,
    max_R: float = DEFAULT_MAX_R,
    max_len: int = DEFAULT_MAX_LEN,
) -> LambdaRWindow:
    """Lambda_R over ``[window_start, window_start + window_len)``.

    Adds mu(d) log(R/d) at every multiple of each squarefree d <= R.
    """
    if window_start < 1 or window_len < 1:
        raise ValueError("window_start and window_len must be >= 1")
    if R < 2:
        raise ValueError("R must be >= 2")
    if R > max_R or window_len > max_len:
        raise CapacityError(f"R={R} / len={window_len} beyond budget ({max_R}, {max_len})")
    cut = math.floor(R)
    mu = build_tables(1, cut).mu
    values = np.zeros(window_len, dtype=np.float64)
    lr = math.log(R)
    for d in np.flatnonzero(mu).tolist():
        d += 1
        first = -(-window_start // d) * d - window_start
        if first < window_len:
            values[first::d] += int(mu[d - 1]) * (lr - math.log(d))
    return LambdaRWindow(float(R), window_start, window_len, values)


def lambda_r_tuple(n: int, H: TupleSet, window: LambdaRWindow) -> float:
    """Product of Lambda_R(n + h) over h in H; 1 for the empty set."""
    out = 1.0
    for h in H:
        out *= window[n + h]
    return out


def lambda_r_vector(n: int, Hvec: Sequence[int], window: LambdaRWindow) -> float:
    """(log R)^(k - #distinct) times the tuple product over the distinct shifts."""
    distinct = TupleSet(set(Hvec))
    return window.log_R ** (len(Hvec) - distinct.k) * lambda_r_tuple(n, distinct, window)


def elementary_symmetric(power_sums: Sequence[np.ndarray], kmax: int) -> list:
    """e_0..e_kmax from power sums p_1..p_kmax by Newton's identities."""
    e = [np.ones_like(power_sums[0]) if len(power_sums) else 1.0]
    for v in range(1, kmax + 1):
        acc = 0
        for i in range(1, v + 1):
            term = e[v - i] * power_sums[i - 1]
            acc = acc + term if i % 2 else acc - term
        e.append(acc / v)
    return e


def psi_r_k_array(
    window: LambdaRWindow, lo: int, hi: int, h: int, kmax: int
) -> list[np.ndarray]:
    """[psi_R^(0), ..., psi_R^(kmax)] at every n in ``[lo, hi)``.

    A vector in [1, h]^k with v distinct entries is a set partition of the k
    positions into v blocks together with an ordered choice of v distinct
    shifts, which gives
    ``psi_R^(k) = sum_v S2(k, v) v! (log R)^(k-v) e_v``.
    """
    if kmax > K_CAP:
        raise ValueError(f"k={kmax} beyond cap {K_CAP}")
    m = hi - lo
    out = [np.ones(m, dtype=np.float64)]
    if kmax == 0:
        return out
    vals = window.view(lo + 1, hi + h)
    p = [np.zeros(m) for _ in range(kmax)]
    for j in range(h):
        x = vals[j : j + m]
        xp = x.copy()
        for i in range(kmax):
            if i:
                xp = xp * x
            p[i] += xp
    e = elementary_symmetric(p, kmax)
    L = window.log_R
    for k in range(1, kmax + 1):
        acc = np.zeros(m)
        for v in range(1, k + 1):
            acc += stirling2(k, v) * math.factorial(v) * L ** (k - v) * e[v]
        out.append(acc)
    return out


def psi_r_k(n: int, h: int, k: int, window: LambdaRWindow) -> float:
    """psi_R^(k)(n, h) via the symmetric-function route."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0
    return float(psi_r_k_array(window, n, n + 1, h, k)[k][0])


def psi_r_k_naive(n: int, h: int, k: int, window: LambdaRWindow) -> float:
    """psi_R^(k)(n, h) by summing over all h^k shift vectors."""
    if k == 0:
        return 1.0
    return math.fsum(
        lambda_r_vector(n, vec, window)
        for vec in itertools.product(range(1, h + 1), repeat=k)
    )


def mobius_log_sum(R: float, m: int) -> float:
    """Sum of mu(d)/d log(R/d) over d <= R coprime to m."""
    if R < 2 or m < 1:
        raise ValueError("need R >= 2 and m >= 1")
    cut = math.floor(R)
    mu = build_tables(1, cut).mu.astype(np.float64)
    d = np.arange(1, cut + 1, dtype=np.int64)
    keep = (mu != 0) & (np.gcd(d, m) == 1)
    dk = d[keep].astype(np.float64)
    return accurate_sum(mu[keep] / dk * (math.log(R) - np.log(dk)))


# --- cache ----------------------------------------------------------------


def save_lambda_r_window(window: LambdaRWindow, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, window.window_start, window.window_len, window.R))
        fh.write(window.values.astype("<f8").tobytes())
    tmp.replace(path)
    return path


def load_lambda_r_window(path: str | Path) -> LambdaRWindow:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CacheError(str(exc)) from exc
    if len(raw) < _HEADER.size:
        raise CacheError(f"{path}: truncated header")
    magic, start, length, R = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise CacheError(f"{path}: bad magic {magic!r}")
    if start < 1 or length < 1 or len(raw) != _HEADER.size + 8 * length:
        raise CacheError(f"{path}: size does not match header")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    if not np.isfinite(values).all() or not R >= 2:
        raise CacheError(f"{path}: non-finite payload")
    return LambdaRWindow(R, start, length, values)


def cached_lambda_r_window(
    window_start: int, window_len: int, R: float, cache_dir: str | Path | None = None
) -> LambdaRWindow:
    if cache_dir is None:
        return build_lambda_r_window(window_start, window_len, R)
    path = Path(cache_dir) / f"lr_{window_start}_{window_len}_{float(R).hex()}.pglr"
    if path.exists():
        try:
            win = load_lambda_r_window(path)
            if win.R == float(R) and win.window_start == window_start and win.window_len == window_len:
                return win
            log.warning("cache %s header disagrees with request; rebuilding", path)
        except CacheError as exc:
            log.warning("rebuilding corrupt cache %s (%s)", path, exc)
    win = build_lambda_r_window(window_start, window_len, R)
    save_lambda_r_window(win, path)
    return win
