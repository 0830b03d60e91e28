"""The S_k detection statistic, dense-cluster counts, gap census, and sanity bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ._numerics import accurate_sum, chunked_reduce
from .arith import build_tables, short_interval_psi, small_primes
from .correlations import LAMBDA_CAP, Lab, h_from_lambda
from .divisor_sums import psi_r_k_array
from .poisson import as_fraction, build_moment_form, poisson_moment_value, quadratic_form, stirling2
from .tuples import TupleSet, is_admissible, singular_series


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    ratio: Optional[float] = None
    detail: str = ""


def default_theta(k: int) -> float:
    """Lower end of the admissible range 1/(4k+1) <= theta < 1/(4k)."""
    return 1.0 / (4 * k + 1)


def optimizer_coefficients(k: int, lam_t: float, rho_t: float) -> tuple[Fraction, ...]:
    """Exact a_0..a_k (a_k = 1) maximising Q at (lambda~, rho~); (1,) when k = 0."""
    if k == 0:
        return (Fraction(1),)
    return build_moment_form(k, as_fraction(lam_t), as_fraction(rho_t)).a


def s_k_statistic(
    N: int,
    R: float,
    lam: float,
    rho: float,
    k: int,
    a: Optional[Sequence[float]] = None,
    lab: Optional[Lab] = None,
) -> float:
    """(N (log R)^(2k+1))^-1 sum over (N, 2N] of (psi(n,h) - rho log N) P_k^2.

    ``P_k = sum_l a_l psi_R^(l)(n,h) (log R)^(k-l)`` with h = round(lambda log N).
    Without ``a`` the exact optimiser at (lambda/theta, rho/theta) is used.
    """
    lab = lab or Lab(N)
    h = h_from_lambda(lam, N)
    lab.check_shift(h)
    L = math.log(R)
    if a is None:
        theta = L / lab.log_N
        a = optimizer_coefficients(k, (h / lab.log_N) / theta, rho / theta)
    if len(a) != k + 1:
        raise ValueError("need k + 1 coefficients")
    a = [float(x) for x in a]
    table = lab.table
    window = lab.window(R) if k else None
    shift = rho * lab.log_N

    def piece(lo: int, hi: int) -> float:
        weight = short_interval_psi(table, lo, hi, h) - shift
        if k:
            psis = psi_r_k_array(window, lo, hi, h, k)
            P = sum(a[l] * psis[l] * L ** (k - l) for l in range(k + 1))
        else:
            P = a[0]
        return accurate_sum(weight * P * P)

    return lab.reduce(piece) / (N * L ** (2 * k + 1))


def _prime_flags(N: int, h: int, lab: Optional[Lab]) -> np.ndarray:
    """is_prime for n in [N+1, 2N+h]."""
    if lab is not None and lab.N == N and h <= lab.max_shift:
        return lab.table.view("is_prime", N + 1, 2 * N + h + 1)
    return build_tables(N + 1, N + max(h, 1)).is_prime[: N + h]


def q_r_plus(N: int, h: int, r: int, lab: Optional[Lab] = None) -> int:
    """Number of n in (N, 2N] with more than r primes in (n, n+h]."""
    if h <= 0:
        return 0
    flags = _prime_flags(N, h, lab).astype(np.int32)
    counts = np.zeros(N, dtype=np.int32)
    # flags[0] is N+1, and n = N+1+i looks at N+2+i .. N+1+i+h
    for j in range(1, h + 1):
        counts += flags[j : j + N]
    return int(np.count_nonzero(counts > r))


def cluster_gap_count(N: int, h: int, r: int) -> int:
    """Number of j with N+1 < p_j, p_{j+r} <= 2N+h and p_{j+r} - p_j <= h.

    Every n counted by ``q_r_plus(N, h, r)`` has such a j with
    p_{j+r} - h <= n < p_j, so ``q_r_plus <= h * cluster_gap_count``.
    """
    p = small_primes(2 * N + h)
    p = p[p >= N + 2]
    if p.size <= r:
        return 0
    return int(np.count_nonzero(p[r:] - p[:-r] <= h)) if r else int(p.size)


def gap_census(N: int, lam: float, r: int, primes: Optional[np.ndarray] = None) -> tuple[int, float]:
    """Count of p_n with p_{n+r} <= N and p_{n+r} - p_n <= lambda log p_n, and count / pi(N)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    p = small_primes(N) if primes is None else primes[primes <= N]
    if p.size == 0:
        return 0, 0.0
    if p.size <= r:
        return 0, 0.0
    gaps = p[r:] - p[:-r]
    count = int(np.count_nonzero(gaps <= lam * np.log(p[:-r].astype(np.float64))))
    return count, count / p.size


def fourth_moment_bound(lam: float) -> float:
    """sum_{v=1..4} S2(4, v) v! (2 lambda)^v."""
    return sum(stirling2(4, v) * math.factorial(v) * (2 * lam) ** v for v in range(1, 5))


def fourth_moment_check(N: int, h: int, lab: Optional[Lab] = None) -> Check:
    lab = lab or Lab(N)
    lam = h / lab.log_N
    if lam > LAMBDA_CAP:
        raise ValueError(f"lambda = {lam:.3g} exceeds cap {LAMBDA_CAP}")
    if h == 0:
        m4 = 0.0
    else:
        lab.check_shift(h)
        table = lab.table
        m4 = lab.reduce(lambda a, b: accurate_sum(short_interval_psi(table, a, b, h) ** 4))
        m4 /= N * lab.log_N**4
    bound = fourth_moment_bound(lam)
    mu4 = float(poisson_moment_value(4, lam))
    return Check(
        "fourth_moment",
        m4,
        bound,
        m4 <= bound,
        m4 / mu4 if mu4 else None,
        f"lambda={lam:.6g}, mu_4(lambda)={mu4:.6g}",
    )


def tuple_prime_sum(H: TupleSet, N: int) -> float:
    """sum_{n <= N} prod_{h in H} Lambda(n + h)."""
    table = build_tables(1, N + (H.shifts[-1] if H.k else 0))

    def piece(a: int, b: int) -> float:
        acc = np.ones(b - a)
        for s in H:
            acc *= table.view("lam", a + s, b + s)
        return accurate_sum(acc)

    return chunked_reduce(1, N + 1, piece)


def sieve_bound_check(H: TupleSet, N: int) -> Check:
    """Prime-tuple count against the upper-bound sieve constant 2^k k!."""
    k = H.k
    value = tuple_prime_sum(H, N)
    bound = 2**k * math.factorial(k)
    if not is_admissible(H):
        return Check("sieve_bound", value, bound, True, None, "inadmissible: vacuous")
    sing = singular_series(H, max(10**6, H.max_diff)).value
    ratio = value / (sing * N)
    return Check("sieve_bound", value, bound, ratio < bound, ratio, f"S(H)={sing:.12g}")


@dataclass
class GapReport:
    N: int
    h: int
    lam: float
    rho: float
    k: int
    theta: float
    a: list = field(default_factory=list)
    s_k_value: Optional[float] = None
    q_a: Optional[float] = None
    q_r_plus: Optional[int] = None
    census: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["a"] = [str(x) for x in self.a]
        out["checks"] = {k: asdict(v) for k, v in self.checks.items()}
        return out


def gap_report(
    N: int,
    lam: float,
    rho: float,
    k: int,
    theta: Optional[float] = None,
    mode: str = "sk",
    r: Optional[int] = None,
    lab: Optional[Lab] = None,
) -> GapReport:
    """Assemble the quantities requested by ``mode`` (sk, census, qrplus, checks)."""
    lab = lab or Lab(N)
    theta = default_theta(k) if theta is None else theta
    h = h_from_lambda(lam, N)
    lam_act = h / lab.log_N
    rep = GapReport(N, h, lam_act, rho, k, theta)
    r = r if r is not None else max(1, math.floor(rho))
    if mode == "sk":
        lam_t, rho_t = lam_act / theta, rho / theta
        rep.a = list(optimizer_coefficients(k, lam_t, rho_t))
        rep.q_a = float(quadratic_form(rep.a, as_fraction(lam_t), as_fraction(rho_t)))
        rep.s_k_value = s_k_statistic(N, lab.R_from_theta(theta), lam, rho, k, rep.a, lab)
    elif mode == "qrplus":
        rep.q_r_plus = q_r_plus(N, h, r, lab)
    elif mode == "census":
        primes = small_primes(N)
        for x in (0.25, 0.5, 0.75, 1.0, lam):
            rep.census[f"{x:g}"] = gap_census(N, x, r, primes)[0]
    elif mode == "checks":
        rep.checks["fourth_moment"] = fourth_moment_check(N, h, lab)
        rep.checks["sieve_bound_twin"] = sieve_bound_check(TupleSet([0, 2]), N)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return rep
