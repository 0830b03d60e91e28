"""Empirical correlation sums over (N, 2N] against their predicted main terms."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ._numerics import accurate_sum, chunked_reduce
from .arith import ArithTable, WindowError, cached_tables, short_interval_psi
from .divisor_sums import LambdaRWindow, cached_lambda_r_window, psi_r_k_array
from .poisson import poisson_moment_value
from .tuples import TupleSet, singular_series

DEFAULT_MAX_SHIFT = 128
LAMBDA_CAP = 4.0
PROP2_B = 3


class Lab:
    """Sieved tables for one N, shared by every report at that N.

    Covers n in (N, 2N + max_shift], which is what sums over N < n <= 2N
    with shifts up to ``max_shift`` touch.
    """

    def __init__(
        self,
        N: int,
        max_shift: int = DEFAULT_MAX_SHIFT,
        cache_dir=None,
        threads: int = 1,
    ):
        if N < 2:
            raise ValueError("N must be >= 2")
        self.N = N
        self.max_shift = max_shift
        self.cache_dir = cache_dir
        self.threads = max(1, int(threads))
        self.lo, self.hi = N + 1, 2 * N + 1
        self._table: Optional[ArithTable] = None
        self._windows: dict[float, LambdaRWindow] = {}

    @property
    def log_N(self) -> float:
        return math.log(self.N)

    @property
    def table(self) -> ArithTable:
        if self._table is None:
            self._table = cached_tables(self.lo, self.N + self.max_shift, self.cache_dir)
        return self._table

    def window(self, R: float) -> LambdaRWindow:
        R = float(R)
        if R not in self._windows:
            self._windows[R] = cached_lambda_r_window(
                self.lo, self.N + self.max_shift, R, self.cache_dir
            )
        return self._windows[R]

    def check_shift(self, s: int) -> None:
        if s < 0 or s > self.max_shift:
            raise WindowError(f"shift {s} outside [0, {self.max_shift}] for this lab")

    def reduce(self, fn) -> float:
        """Sum ``fn(a, b)`` over pieces of the n-range (N, 2N]."""
        return chunked_reduce(self.lo, self.hi, fn, self.threads)

    def theta(self, R: float) -> float:
        return math.log(R) / self.log_N

    def R_from_theta(self, theta: float) -> float:
        return float(self.N) ** theta


def h_from_lambda(lam: float, N: int) -> int:
    """Interval length h = round(lambda log N)."""
    return int(round(lam * math.log(N)))


@dataclass
class CorrelationReport:
    kind: str
    params: dict
    empirical: float
    predicted: Optional[float]
    ratio: Optional[float]
    runtime_seconds: float
    note: str = ""
    threads: int = 1

    def to_row(self) -> dict:
        row = {"kind": self.kind}
        row.update({k: _fmt(v) for k, v in self.params.items()})
        row.update(
            empirical=_fmt(self.empirical),
            predicted=_fmt(self.predicted),
            ratio=_fmt(self.ratio),
            runtime_seconds=f"{self.runtime_seconds:.3f}",
            threads=self.threads,
            note=self.note,
        )
        return row

    def to_json(self) -> dict:
        out = asdict(self)
        out["params"] = {k: str(v) if isinstance(v, TupleSet) else v for k, v in self.params.items()}
        return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, TupleSet):
        return str(v)
    return str(v)


def _ratio(emp: float, pred: Optional[float]) -> Optional[float]:
    return emp / pred if pred not in (None, 0) else None


def _product_sum(lab: Lab, window: LambdaRWindow, powers: dict[int, int], extra=None) -> float:
    """Sum over (N, 2N] of prod_h Lambda_R(n+h)^powers[h], times ``extra(a, b)`` if given."""
    for s in powers:
        lab.check_shift(s)
    order = sorted(powers.items())

    def piece(a: int, b: int) -> float:
        m = b - a
        acc = np.ones(m, dtype=np.float64)
        for s, e in order:
            v = window.view(a + s, b + s)
            for _ in range(e):
                acc *= v
        if extra is not None:
            acc *= extra(a, b)
        return accurate_sum(acc)

    return lab.reduce(piece)


def _powers(*sets: Iterable[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for s in sets:
        for h in s:
            out[h] = out.get(h, 0) + 1
    return out


def correlation_pair(
    H1: TupleSet, H2: TupleSet, N: int, R: float, lab: Optional[Lab] = None
) -> CorrelationReport:
    """sum Lambda_R(n; H1) Lambda_R(n; H2) vs N S(H1 u H2) (log R)^|H1 n H2|."""
    t0 = time.perf_counter()
    lab = lab or Lab(N)
    if not R < N:
        raise ValueError("need R < N")
    window = lab.window(R)
    emp = _product_sum(lab, window, _powers(H1, H2))
    union, r = H1 | H2, (H1 & H2).k
    sing = singular_series(union, max(10**6, union.max_diff)).value
    pred = N * sing * math.log(R) ** r
    note = "" if sing > 0 else "inadmissible union"
    return CorrelationReport(
        "pair",
        {"H1": H1, "H2": H2, "N": N, "R": float(R), "theta": lab.theta(R)},
        emp,
        pred if sing > 0 else 0.0,
        _ratio(emp, pred) if sing > 0 else None,
        time.perf_counter() - t0,
        note,
        lab.threads,
    )


def default_prop2_R(k: int, N: int, B: float = PROP2_B) -> float:
    """N^(1/(2k)) (log N)^(-B)."""
    R = N ** (1.0 / (2 * k)) * math.log(N) ** (-B)
    if R < 2:
        raise ValueError(
            f"default R = N^(1/{2 * k}) (log N)^-{B} = {R:.3g} < 2 at N={N}; pass R or theta"
        )
    return R


def correlation_with_prime(
    H1: TupleSet,
    H2: TupleSet,
    h0: int,
    N: int,
    R: Optional[float] = None,
    lab: Optional[Lab] = None,
    primes_only: bool = False,
) -> CorrelationReport:
    """sum Lambda_R(n; H1) Lambda_R(n; H2) Lambda(n + h0) vs N S(H u {h0}) (log R)^r0."""
    t0 = time.perf_counter()
    lab = lab or Lab(N)
    k = H1.k + H2.k
    if R is None:
        R = default_prop2_R(max(k, 1), N)
    lab.check_shift(h0)
    window, table = lab.window(R), lab.table
    name = "is_prime" if primes_only else "lam"

    def weight(a: int, b: int) -> np.ndarray:
        v = table.view(name, a + h0, b + h0)
        if primes_only:
            return np.where(v, np.log(np.arange(a + h0, b + h0, dtype=np.float64)), 0.0)
        return v

    emp = _product_sum(lab, window, _powers(H1, H2), weight)
    union = H1 | H2
    r0 = (H1 & H2).k + (1 if h0 in union else 0)
    H0 = union | TupleSet([h0])
    sing = singular_series(H0, max(10**6, H0.max_diff)).value
    pred = N * sing * math.log(R) ** r0
    return CorrelationReport(
        "prime",
        {"H1": H1, "H2": H2, "h0": h0, "N": N, "R": float(R), "theta": lab.theta(R)},
        emp,
        pred if sing > 0 else 0.0,
        _ratio(emp, pred) if sing > 0 else None,
        time.perf_counter() - t0,
        ("primes only" if primes_only else "") + ("" if sing > 0 else "inadmissible"),
        lab.threads,
    )


def _moment_sum(lab: Lab, R: float, h: int, i: int, j: int, with_psi: bool) -> float:
    window, table = lab.window(R), lab.table
    lab.check_shift(h)
    kmax = max(i, j)

    def piece(a: int, b: int) -> float:
        if kmax:
            psis = psi_r_k_array(window, a, b, h, kmax)
            acc = psis[i] * psis[j]
        else:
            acc = np.ones(b - a)
        if with_psi:
            acc = acc * short_interval_psi(table, a, b, h)
        return accurate_sum(acc)

    return lab.reduce(piece)


def moment_M(
    i: int, j: int, N: int, h: int, R: float, lab: Optional[Lab] = None
) -> CorrelationReport:
    """M_ij(R) = (N (log R)^(i+j))^-1 sum psi_R^(i) psi_R^(j) vs mu_{i+j}(lambda/theta)."""
    t0 = time.perf_counter()
    if i < 0 or j < 0:
        raise ValueError("need i, j >= 0")
    lab = lab or Lab(N)
    k = i + j
    L = math.log(R)
    emp = _moment_sum(lab, R, h, i, j, False) / (N * L**k)
    theta, lam = lab.theta(R), h / lab.log_N
    pred = float(poisson_moment_value(k, lam / theta)) if k else 1.0
    note = "" if k == 0 or theta < 1.0 / k else "theta outside (0, 1/k): prediction unsupported"
    return CorrelationReport(
        "M",
        {"i": i, "j": j, "N": N, "h": h, "R": float(R), "theta": theta, "lambda": lam},
        emp,
        pred,
        _ratio(emp, pred),
        time.perf_counter() - t0,
        note,
        lab.threads,
    )


def moment_M_tilde(
    i: int, j: int, N: int, h: int, R: float, lab: Optional[Lab] = None
) -> CorrelationReport:
    """Mixed moment with one factor psi(n, h) vs mu_{i+j+1}(lambda/theta)."""
    t0 = time.perf_counter()
    if i < 0 or j < 0:
        raise ValueError("need i, j >= 0")
    lab = lab or Lab(N)
    k = i + j
    L = math.log(R)
    emp = _moment_sum(lab, R, h, i, j, True) / (N * L ** (k + 1))
    theta, lam = lab.theta(R), h / lab.log_N
    pred = float(poisson_moment_value(k + 1, lam / theta))
    note = (
        "" if k == 0 or theta < 1.0 / (2 * k) else "theta outside (0, 1/(2k)): prediction unsupported"
    )
    return CorrelationReport(
        "M_tilde",
        {"i": i, "j": j, "N": N, "h": h, "R": float(R), "theta": theta, "lambda": lam},
        emp,
        pred,
        _ratio(emp, pred),
        time.perf_counter() - t0,
        note,
        lab.threads,
    )


def gallagher_moment(k: int, N: int, h: int, lab: Optional[Lab] = None) -> CorrelationReport:
    """(N (log N)^k)^-1 sum psi(n, h)^k vs mu_k(lambda)."""
    t0 = time.perf_counter()
    lab = lab or Lab(N)
    lam = h / lab.log_N
    if lam > LAMBDA_CAP:
        raise ValueError(f"lambda = {lam:.3g} exceeds cap {LAMBDA_CAP}")
    if k == 0:
        emp = 1.0
    else:
        lab.check_shift(h)
        table = lab.table
        emp = lab.reduce(lambda a, b: accurate_sum(short_interval_psi(table, a, b, h) ** k))
        emp /= N * lab.log_N**k
    pred = float(poisson_moment_value(k, lam))
    return CorrelationReport(
        "gallagher",
        {"k": k, "N": N, "h": h, "lambda": lam},
        emp,
        pred,
        _ratio(emp, pred),
        time.perf_counter() - t0,
        "",
        lab.threads,
    )


def generalized_correlation(
    H: TupleSet, a: Sequence[int], N: int, R: float, lab: Optional[Lab] = None
) -> CorrelationReport:
    """sum prod Lambda_R(n + h_i)^a_i; predicted only when every a_i is 1 or 2."""
    t0 = time.perf_counter()
    if len(a) != H.k or any(e < 1 for e in a):
        raise ValueError("need one exponent >= 1 per shift")
    lab = lab or Lab(N)
    powers = dict(zip(H.shifts, a))
    emp = _product_sum(lab, lab.window(R), powers)
    pred = ratio = None
    note = ""
    if all(e in (1, 2) for e in a):
        doubled = sum(1 for e in a if e == 2)
        sing = singular_series(H, max(10**6, H.max_diff)).value
        pred = N * sing * math.log(R) ** doubled
        ratio = _ratio(emp, pred)
    else:
        note = "constant for exponents >= 3 not available"
    return CorrelationReport(
        "generalized",
        {"H": H, "a": ",".join(map(str, a)), "N": N, "R": float(R), "theta": lab.theta(R)},
        emp,
        pred,
        ratio,
        time.perf_counter() - t0,
        note,
        lab.threads,
    )


# --- grid runs ------------------------------------------------------------

GRID_COLUMNS = ["h1", "h2", "h0", "N", "theta", "R"]


def run_grid(rows: Iterable[dict], cache_dir=None, threads: int = 1) -> list[CorrelationReport]:
    """Evaluate a parameter grid; rows carry h1, h2, optional h0, N, theta or R.

    Rows sharing N reuse one set of sieved tables.
    """
    labs: dict[int, Lab] = {}
    out = []
    for row in rows:
        N = int(float(row["N"]))
        lab = labs.get(N)
        if lab is None:
            labs.clear()
            lab = labs[N] = Lab(N, cache_dir=cache_dir, threads=threads)
        H1 = TupleSet.parse(row.get("h1", "") or "")
        H2 = TupleSet.parse(row.get("h2", "") or "")
        theta, R = (row.get("theta") or "").strip(), (row.get("R") or "").strip()
        if bool(theta) == bool(R):
            raise ValueError(f"row {row}: give exactly one of theta, R")
        R = float(R) if R else lab.R_from_theta(float(theta))
        h0 = (row.get("h0") or "").strip()
        if h0:
            out.append(correlation_with_prime(H1, H2, int(h0), N, R, lab))
        else:
            out.append(correlation_pair(H1, H2, N, R, lab))
    return out


def reports_to_csv(reports: Sequence[CorrelationReport]) -> str:
    rows = [r.to_row() for r in reports]
    cols: list[str] = []
    for r in rows:
        cols.extend(c for c in r if c not in cols)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
