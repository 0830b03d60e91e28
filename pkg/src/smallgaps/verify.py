"""Named acceptance checks, shared by ``verify-all`` and the test-suite.

Each check returns an :class:`Outcome` carrying the measured numbers, so a
failing check says by how much it failed.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .correlations import (
    Lab,
    correlation_pair,
    correlation_with_prime,
    h_from_lambda,
    moment_M,
    moment_M_tilde,
)
from .divisor_sums import build_lambda_r_window, psi_r_k, psi_r_k_naive
from .gaps import (
    fourth_moment_check,
    gap_census,
    optimizer_coefficients,
    q_r_plus,
    s_k_statistic,
    sieve_bound_check,
)
from .poisson import (
    SingularSystemError,
    as_fraction,
    build_moment_form,
    det_closed_form_check,
    f_h_det_check,
    falling_factorial_check,
    finite_k_threshold,
    lambda_power_identity_check,
    laguerre_derivative_check,
    q_max_closed_form,
    quadratic_form,
    smallest_zero,
    surjection_identity_check,
)
from .reports import bounds_table
from .tuples import TupleSet, nu_p, subset_parity_identity


@dataclass
class Outcome:
    criterion: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seconds: float = 0.0
    hard: bool = True

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"[{status}] criterion {self.criterion:>2} {self.name} ({self.seconds:.1f}s)"
        if self.failures:
            msg += ": " + "; ".join(self.failures[:4])
            if len(self.failures) > 4:
                msg += f"; ... {len(self.failures) - 4} more"
        return msg

    def to_json(self) -> dict:
        return asdict(self)


class LabPool:
    """One :class:`Lab` per N, reused across checks."""

    def __init__(self, cache_dir=None, threads: int = 1, keep: int = 1):
        self.cache_dir, self.threads, self.keep = cache_dir, threads, keep
        self._labs: dict[int, Lab] = {}

    def __call__(self, N: int) -> Lab:
        if N not in self._labs:
            while len(self._labs) >= self.keep:
                self._labs.pop(next(iter(self._labs)))
            self._labs[N] = Lab(N, cache_dir=self.cache_dir, threads=self.threads)
        return self._labs[N]


def _timed(criterion: int, name: str, fn: Callable[[Outcome], None], hard: bool = True) -> Outcome:
    out = Outcome(criterion, name, True, hard=hard)
    t0 = time.perf_counter()
    fn(out)
    out.seconds = time.perf_counter() - t0
    out.passed = not out.failures
    return out


def _random_rational(rng: random.Random, lo: int, hi: int, den: int = 12) -> Fraction:
    return Fraction(rng.randint(lo * den + 1, hi * den), rng.randint(1, den))


# --- exact suite ------------------------------------------------------------


def exact_identities(seed: int = 20240601, samples: int = 20) -> Outcome:
    def run(out: Outcome) -> None:
        rng = random.Random(seed)
        counted = 0
        for k in range(1, 7):
            for _ in range(samples):
                lam = _random_rational(rng, 0, 8)
                rho = k + _random_rational(rng, 0, 10)
                try:
                    form = build_moment_form(k, lam, rho)
                except SingularSystemError:
                    continue
                counted += 1
                tag = f"k={k} lambda={lam} rho={rho}"
                if form.Q != form.D[k] / form.D[k - 1]:
                    out.failures.append(f"Q != D_k/D_(k-1) at {tag}")
                if not det_closed_form_check(k, lam, rho):
                    out.failures.append(f"Hankel closed form at {tag}")
                if q_max_closed_form(k, lam, rho) != form.Q:
                    out.failures.append(f"closed-form Q at {tag}")
        out.measured["moment_form_cases"] = counted
        for k in range(1, 5):
            for h in range(k + 1):
                for lam in (Fraction(1, 3), Fraction(5, 7), Fraction(11, 2)):
                    if not f_h_det_check(k, h, lam):
                        out.failures.append(f"F_h at k={k} h={h}")
        for j in range(13):
            for k in range(13):
                if not surjection_identity_check(j, k):
                    out.failures.append(f"surjection identity j={j} k={k}")
        for h in range(11):
            if not (lambda_power_identity_check(h) and falling_factorial_check(h)):
                out.failures.append(f"first-kind Stirling identity h={h}")
        for n in range(11):
            for alpha in (0, Fraction(1, 2), Fraction(7, 3), 5):
                if not laguerre_derivative_check(n, alpha):
                    out.failures.append(f"Laguerre derivative n={n} alpha={alpha}")
        cases = 0
        for size in range(1, 6):
            for shifts in itertools.combinations(range(21), size):
                H = TupleSet(shifts)
                for p in (2, 3, 5, 7, 11, 13):
                    cases += 1
                    if subset_parity_identity(H, p) != size - nu_p(H, p):
                        out.failures.append(f"subset parity {H} p={p}")
        out.measured["subset_parity_cases"] = cases

    return _timed(1, "exact identities", run)


def worked_value() -> Outcome:
    def run(out: Outcome) -> None:
        form = build_moment_form(1, 1, 2)
        closed = q_max_closed_form(1, 1, 2)
        out.measured.update(c=[str(x) for x in form.c], a0=str(form.a[0]), Q=str(form.Q), Q_closed=str(closed))
        if form.c != (-1, 0, 1):
            out.failures.append(f"c = {form.c}")
        if form.a[0] != 0:
            out.failures.append(f"a_0 = {form.a[0]}")
        if not form.Q == closed == 1:
            out.failures.append(f"Q = {form.Q}, closed form {closed}")

    return _timed(2, "worked moment form k=1", run)


def laguerre_zeros() -> Outcome:
    def run(out: Outcome) -> None:
        for alpha in (0, 0.5, 3, 10):
            if smallest_zero(1, alpha) != alpha + 1:
                out.failures.append(f"x_1(1,{alpha})")
        err = abs(smallest_zero(2, 0) - (2 - math.sqrt(2)))
        out.measured["x1_2_0_error"] = err
        if err > 1e-10:
            out.failures.append(f"x_1(2,0) off by {err:.3g}")
        for k in range(1, 7):
            for rho in (k + 0.5, k + 2, k + 10):
                upper = smallest_zero(k + 1, rho - k - 1)
                lower = smallest_zero(k, rho - k)
                if not upper < lower:
                    out.failures.append(f"interlacing k={k} rho={rho}: {upper} >= {lower}")
        d60 = abs(smallest_zero(60, 180) / 60 - 1)
        d15 = abs(smallest_zero(15, 45) / 15 - 1)
        out.measured.update(dev_60=d60, dev_15=d15)
        if not (d60 <= 0.15 and d60 < d15):
            out.failures.append(f"|x_1(60,180)/60 - 1| = {d60:.4f}, at n=15 {d15:.4f}")

    return _timed(3, "Laguerre zeros", run)


def threshold_convergence(k_max: int = 40) -> Outcome:
    def run(out: Outcome) -> None:
        vals = {k: finite_k_threshold(k, 1, 1 / (4 * k + 1), 1 + 1 / k) for k in range(1, k_max + 1)}
        out.measured["lambda_k"] = vals
        low = [k for k, v in vals.items() if not v > 0.25]
        if low:
            out.failures.append(f"lambda_k <= 1/4 at k={low}")
        if not vals[k_max] < 0.40:
            out.failures.append(f"lambda_{k_max} = {vals[k_max]:.5f}")

    out = _timed(4, "finite-k threshold convergence", run)
    if out.seconds >= 30:
        out.failures.append(f"runtime {out.seconds:.1f}s >= 30s")
        out.passed = False
    return out


def counting_oracles(seed: int = 7, samples: int = 100) -> Outcome:
    def run(out: Outcome) -> None:
        q = q_r_plus(10, 10, 1)
        g = gap_census(100, 0.5, 1)[0]
        out.measured.update(q_r_plus=q, gap_census=g)
        if q != 10:
            out.failures.append(f"q_r_plus(10,10,1) = {q}")
        if g != 2:
            out.failures.append(f"gap_census(100,0.5,1) = {g}")
        rng = random.Random(seed)
        start = 10**5
        window = build_lambda_r_window(start, 10**5, 10 ** 1.2)
        worst = 0.0
        for _ in range(samples):
            n = rng.randrange(start, start + 10**5 - 10)
            h, k = rng.randint(1, 6), rng.randint(0, 4)
            fast, slow = psi_r_k(n, h, k, window), psi_r_k_naive(n, h, k, window)
            worst = max(worst, abs(fast - slow) / max(1.0, abs(slow)))
        out.measured["psi_r_k_max_rel_diff"] = worst
        if worst > 1e-9:
            out.failures.append(f"psi_R^(k) fast vs naive differ by {worst:.3g}")

    return _timed(8, "counting oracles", run)


def bounds_digits() -> Outcome:
    expected = {
        "tuple-sieve-quarter": (0.25, 1e-12),
        "EH": (0.085786, 5e-7),
        "maier": (0.561459, 5e-7),
        "huxley-B4": (0.44254, 0),
        "huxley-B3.5": (0.43494, 0),
        "maier-huxley": (0.24846, 0),
    }

    def run(out: Outcome) -> None:
        rows = {r.name: r.value for r in bounds_table()}
        out.measured.update(rows)
        for name, (want, tol) in expected.items():
            if abs(rows[name] - want) > tol:
                out.failures.append(f"{name} = {rows[name]!r}, want {want}")
        if not str(rows["maier"]).startswith("0.56145"):
            out.failures.append("maier row does not start 0.56145")

    return _timed(10, "bounds table digits", run)


# --- empirical suite --------------------------------------------------------

PROP1_PAIRS = (([0], [0]), ([0, 2], [0, 2]), ([0], [2]))


def prop1_desk_scale(pool: LabPool, Ns=(10**5, 10**6, 10**7), tol=0.25, slack=0.02) -> Outcome:
    def run(out: Outcome) -> None:
        for h1, h2 in PROP1_PAIRS:
            H1, H2 = TupleSet(h1), TupleSet(h2)
            devs = []
            for N in Ns:
                lab = pool(N)
                rep = correlation_pair(H1, H2, N, lab.R_from_theta(0.2), lab)
                devs.append(abs(rep.ratio - 1))
            tag = f"{H1}x{H2}"
            out.measured[tag] = {"N": list(Ns), "abs_ratio_minus_1": devs}
            if devs[-1] > tol:
                out.failures.append(f"{tag}: |ratio-1| = {devs[-1]:.4f} > {tol} at N={Ns[-1]}")
            for a, b, N in zip(devs, devs[1:], Ns[1:]):
                if b > a + slack:
                    out.failures.append(f"{tag}: |ratio-1| rose {a:.4f} -> {b:.4f} at N={N}")

    return _timed(5, "pair correlations at R = N^(1/5)", run)


def prop2_desk_scale(pool: LabPool, N: int = 10**7) -> Outcome:
    def run(out: Outcome) -> None:
        lab = pool(N)
        rep = correlation_with_prime(TupleSet([0]), TupleSet([0]), 2, N, lab.R_from_theta(1 / 8), lab)
        out.measured["ratio"] = rep.ratio
        if not 0.7 < rep.ratio < 1.3:
            out.failures.append(f"ratio {rep.ratio:.4f} outside (0.7, 1.3)")

    return _timed(6, "correlation with a prime, R = N^(1/8)", run)


def prop4_desk_scale(pool: LabPool, N: int = 10**7) -> Outcome:
    def run(out: Outcome) -> None:
        lab = pool(N)
        h = h_from_lambda(1.0, N)
        m00 = moment_M(0, 0, N, h, lab.R_from_theta(0.2), lab).empirical
        m11 = moment_M(1, 1, N, h, lab.R_from_theta(0.2), lab).empirical
        mt00 = moment_M_tilde(0, 0, N, h, lab.R_from_theta(0.25), lab).empirical
        out.measured.update(M00=m00, M11=m11, M11_over_30=m11 / 30, Mtilde00=mt00, Mtilde00_over_4=mt00 / 4)
        if m00 != 1.0:
            out.failures.append(f"M_00 = {m00!r}")
        if abs(m11 / 30 - 1) > 0.35:
            out.failures.append(f"M_11 = {m11:.4f}, not within 35% of 30")
        if abs(mt00 / 4 - 1) > 0.20:
            out.failures.append(f"M~_00 = {mt00:.4f}, not within 20% of 4")

    return _timed(7, "moment sums M and M~", run)


def inequality_checks(pool: LabPool, N: int = 10**7) -> Outcome:
    def run(out: Outcome) -> None:
        lab = pool(N)
        sb = sieve_bound_check(TupleSet([0, 2]), N)
        fm = fourth_moment_check(N, h_from_lambda(1.0, N), lab)
        out.measured.update(twin_ratio=sb.ratio, M4=fm.value, M4_bound=fm.bound, M4_over_15=fm.value / 15)
        if not (0.9 < sb.ratio < 1.1 and sb.passed):
            out.failures.append(f"twin sieve ratio {sb.ratio:.4f}")
        if not (fm.passed and fm.value <= 730):
            out.failures.append(f"M_4 = {fm.value:.4f} exceeds B")
        if abs(fm.value / 15 - 1) > 0.35:
            out.failures.append(f"M_4 = {fm.value:.4f}, not within 35% of 15 (ratio {fm.value / 15:.4f})")

    return _timed(9, "sieve bound and fourth moment", run)


SIGN_GRID_LAMBDA = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0)
SIGN_GRID_RHO = (1.0, 1.5, 2.0)


def sign_grid(pool: LabPool, k: int, N: int = 10**7, guard: float = 0.5) -> list[dict]:
    """S_k against Q_a over the (lambda, rho) grid at theta = 1/(4k+1)."""
    lab = pool(N)
    theta = 1 / (4 * k + 1)
    R = lab.R_from_theta(theta)
    theta = lab.theta(R)
    rows = []
    for rho in SIGN_GRID_RHO:
        for lam in SIGN_GRID_LAMBDA:
            h = h_from_lambda(lam, N)
            lam_t, rho_t = (h / lab.log_N) / theta, rho / theta
            try:
                a = optimizer_coefficients(k, lam_t, rho_t)
            except SingularSystemError:
                continue
            q = float(quadratic_form(a, as_fraction(lam_t), as_fraction(rho_t)))
            s = s_k_statistic(N, R, lam, rho, k, a, lab)
            rows.append(
                {
                    "k": k,
                    "lambda": lam,
                    "rho": rho,
                    "lambda_tilde": lam_t,
                    "rho_tilde": rho_t,
                    "Q_a": q,
                    "S_k": s,
                    "guarded": abs(q) > guard,
                    "agree": (q > 0) == (s > 0),
                }
            )
    return rows


def sign_experiment(pool: LabPool, N: int = 10**7, hard_ks=(0, 1), report_ks=(2,)) -> Outcome:
    def run(out: Outcome) -> None:
        for k in tuple(hard_ks) + tuple(report_ks):
            rows = sign_grid(pool, k, N)
            out.measured[f"k={k}"] = rows
            if k not in hard_ks:
                continue
            for r in rows:
                if r["guarded"] and not r["agree"]:
                    out.failures.append(
                        f"k={k} lambda={r['lambda']} rho={r['rho']}: Q_a={r['Q_a']:.3g}, S_k={r['S_k']:.3g}"
                    )

    return _timed(11, "S_k sign experiment", run)


EXACT_SUITE = (exact_identities, worked_value, laguerre_zeros, threshold_convergence, counting_oracles, bounds_digits)


def empirical_suite(pool: LabPool, N: int = 10**7) -> list[Callable[[], Outcome]]:
    Ns = tuple(n for n in (10**5, 10**6, 10**7) if n < N) + (N,)
    return [
        lambda: prop1_desk_scale(pool, Ns),
        lambda: prop2_desk_scale(pool, N),
        lambda: prop4_desk_scale(pool, N),
        lambda: inequality_checks(pool, N),
        lambda: sign_experiment(pool, N),
    ]


def run_all(
    N: int = 10**7,
    skip_empirical: bool = False,
    cache_dir=None,
    threads: int = 1,
    log: Optional[Callable[[str], None]] = None,
) -> list[Outcome]:
    """Every check, in criterion order; failures are collected, not raised."""
    jobs: list[Callable[[], Outcome]] = list(EXACT_SUITE)
    if not skip_empirical:
        jobs += empirical_suite(LabPool(cache_dir, threads), N)
    results = []
    for job in jobs:
        try:
            res = job()
        except Exception as exc:  # keep going; the bundle records the error
            res = Outcome(-1, getattr(job, "__name__", "check"), False, failures=[repr(exc)])
        results.append(res)
        if log:
            log(res.line())
    return sorted(results, key=lambda r: r.criterion)
