import math

import numpy as np
import pytest

from smallgaps.arith import small_primes
from smallgaps.correlations import Lab, h_from_lambda
from smallgaps.gaps import (
    GapReport,
    cluster_gap_count,
    default_theta,
    fourth_moment_bound,
    fourth_moment_check,
    gap_census,
    gap_report,
    optimizer_coefficients,
    q_r_plus,
    s_k_statistic,
    sieve_bound_check,
    tuple_prime_sum,
)
from smallgaps.poisson import as_fraction, quadratic_form
from smallgaps.tuples import TupleSet, is_prime

from conftest import mangoldt


def q_brute(N, h, r):
    return sum(1 for n in range(N + 1, 2 * N + 1) if sum(is_prime(m) for m in range(n + 1, n + h + 1)) > r)


def census_brute(N, lam, r):
    p = [q for q in range(2, N + 1) if is_prime(q)]
    return sum(1 for i in range(len(p) - r) if p[i + r] - p[i] <= lam * math.log(p[i]))


@pytest.fixture(scope="module")
def lab5():
    return Lab(10**5)


def test_q_r_plus_examples():
    assert q_r_plus(10, 10, 1) == 10
    assert q_r_plus(10, 0, 1) == 0
    assert q_r_plus(10, 10, 5) == 0


@pytest.mark.parametrize("N,h,r", [(50, 7, 1), (200, 12, 2), (1000, 20, 3), (777, 6, 0)])
def test_q_r_plus_brute(N, h, r):
    assert q_r_plus(N, h, r) == q_brute(N, h, r)


def test_q_r_plus_lab_path_matches(lab5):
    assert q_r_plus(10**5, 30, 2, lab5) == q_r_plus(10**5, 30, 2)


def test_q_r_plus_monotone():
    N = 10**4
    grid = {(h, r): q_r_plus(N, h, r) for h in range(0, 41, 5) for r in range(4)}
    for (h, r), v in grid.items():
        if (h, r + 1) in grid:
            assert grid[(h, r + 1)] <= v
        if (h + 5, r) in grid:
            assert grid[(h + 5, r)] >= v


def test_cluster_to_gap_inequality():
    N = 10**4
    for h in range(1, 51):
        for r in (1, 2):
            assert q_r_plus(N, h, r) <= h * cluster_gap_count(N, h, r)


def test_gap_census_examples():
    assert gap_census(100, 0.5, 1) == (2, 2 / 25)
    assert gap_census(10**4, 0, 1)[0] == 0
    with pytest.raises(ValueError):
        gap_census(100, 1, 0)


@pytest.mark.parametrize("lam,r", [(0.3, 1), (1.0, 1), (1.5, 2), (2.5, 3)])
def test_gap_census_brute(lam, r):
    assert gap_census(5000, lam, r)[0] == census_brute(5000, lam, r)


def test_gap_census_monotone_in_lambda():
    primes = small_primes(10**6)
    counts = [gap_census(10**6, x, 2, primes)[0] for x in np.linspace(0, 3, 31)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


@pytest.mark.slow
def test_gap_census_fraction_stable():
    fr = [gap_census(N, 0.5, 1)[1] for N in (10**6, 10**7, 10**8)]
    assert all(f > 0 for f in fr)
    mid = sum(fr) / 3
    assert all(abs(f / mid - 1) <= 0.5 for f in fr)


def test_fourth_moment_bound_values():
    assert fourth_moment_bound(0.5) == 75
    assert fourth_moment_bound(1) == 730


def test_fourth_moment_trivial(lab5):
    chk = fourth_moment_check(10**5, 0, lab5)
    assert chk.value == 0 and chk.passed
    with pytest.raises(ValueError):
        fourth_moment_check(10**5, 60, lab5)


def test_fourth_moment_matches_direct_sum():
    N, h = 2000, 8
    lab = Lab(N)
    from smallgaps.arith import build_tables

    t = build_tables(1, 2 * N + h)
    direct = math.fsum(math.fsum(t.lam[n : n + h]) ** 4 for n in range(N + 1, 2 * N + 1))
    chk = fourth_moment_check(N, h, lab)
    assert chk.value == pytest.approx(direct / (N * math.log(N) ** 4), rel=1e-12)


def lambda_tuple_brute(H, N):
    return math.fsum(math.prod(mangoldt(n + s) for s in H) for n in range(1, N + 1))


def test_sieve_bound():
    one = sieve_bound_check(TupleSet([0]), 10**6)
    assert 0.99 < one.ratio < 1.01 and one.bound == 2 and one.passed
    bad = sieve_bound_check(TupleSet([0, 2, 4]), 2 * 10**4)
    assert bad.passed and bad.ratio is None
    # one of n, n+2, n+4 is divisible by 3, so every hit involves a power of 3
    assert bad.value == pytest.approx(lambda_tuple_brute(TupleSet([0, 2, 4]), 2 * 10**4), rel=1e-13)
    assert bad.value == pytest.approx(lambda_tuple_brute(TupleSet([0, 2, 4]), 240), rel=1e-13)


def test_tuple_prime_sum_brute():
    H = TupleSet([0, 2, 6])
    assert tuple_prime_sum(H, 3000) == pytest.approx(lambda_tuple_brute(H, 3000), rel=1e-13)


def test_s0_closed_shape(lab5):
    N = 10**5
    lam, rho = 1.0, 2.5
    s0 = s_k_statistic(N, N, lam, rho, 0, [1], lab5)
    h = h_from_lambda(lam, N)
    # first moment is close to h, so S_0 is about (h / log N - rho)
    assert s0 == pytest.approx(h / math.log(N) - rho, abs=0.05)
    assert s0 < 0


def test_s_k_default_coefficients(lab5):
    N = 10**5
    R = lab5.R_from_theta(0.2)
    a = optimizer_coefficients(1, (h_from_lambda(1.0, N) / math.log(N)) / 0.2, 1.5 / 0.2)
    assert s_k_statistic(N, R, 1.0, 1.5, 1, None, lab5) == pytest.approx(
        s_k_statistic(N, R, 1.0, 1.5, 1, a, lab5), rel=1e-12
    )
    with pytest.raises(ValueError):
        s_k_statistic(N, R, 1.0, 1.5, 1, [1.0], lab5)


def test_s_k_equals_direct_polynomial_sum():
    N, R, lam, rho = 3000, 5.0, 1.0, 1.5
    lab = Lab(N)
    a = [0.3, -1.2, 1.0]
    got = s_k_statistic(N, R, lam, rho, 2, a, lab)
    h = h_from_lambda(lam, N)
    win, table = lab.window(R), lab.table
    L = math.log(R)
    from smallgaps.divisor_sums import psi_r_k_naive

    terms = []
    for n in range(N + 1, 2 * N + 1):
        psi = math.fsum(table.view("lam", n + 1, n + h + 1).tolist())
        P = sum(a[l] * psi_r_k_naive(n, h, l, win) * L ** (2 - l) for l in range(3))
        terms.append((psi - rho * math.log(N)) * P * P)
    assert got == pytest.approx(math.fsum(terms) / (N * L**5), rel=1e-10)


def test_gap_report_modes(lab5):
    N = 10**5
    sk = gap_report(N, 1.0, 1.5, 1, mode="sk", lab=lab5)
    assert isinstance(sk, GapReport)
    assert abs(sk.lam - sk.h / math.log(N)) < 1e-12
    assert sk.theta == default_theta(1) == 0.2
    assert sk.a[-1] == 1 and math.isfinite(sk.s_k_value)
    lam_t = sk.lam / sk.theta
    assert sk.q_a == pytest.approx(float(quadratic_form(sk.a, as_fraction(lam_t), as_fraction(1.5 / 0.2))))
    cen = gap_report(N, 0.6, 1.5, 1, mode="census", lab=lab5)
    vals = [cen.census[k] for k in sorted(cen.census, key=float)]
    assert all(v >= 0 for v in vals) and vals == sorted(vals)
    assert gap_report(N, 1.0, 1.5, 1, mode="qrplus", lab=lab5).q_r_plus == q_r_plus(N, h_from_lambda(1.0, N), 1)
    with pytest.raises(ValueError):
        gap_report(N, 1.0, 1.5, 1, mode="nope", lab=lab5)


@pytest.mark.slow
def test_desk_scale_sieve_bound_twin():
    chk = sieve_bound_check(TupleSet([0, 2]), 10**7)
    assert 0.9 < chk.ratio < 1.1 and chk.ratio < 8
