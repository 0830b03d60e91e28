"""One test per acceptance criterion, each printing a single PASS/FAIL line."""

import pytest

from smallgaps import verify

from conftest import ACCEPTANCE_LINES

N = 10**7


def check(outcome: verify.Outcome) -> None:
    line = outcome.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert outcome.passed, line


def test_c01_exact_identities():
    out = verify.exact_identities()
    assert out.seconds < 60
    check(out)


def test_c02_worked_value():
    check(verify.worked_value())


def test_c03_laguerre_zeros():
    check(verify.laguerre_zeros())


def test_c04_threshold_convergence():
    check(verify.threshold_convergence())


@pytest.mark.slow
def test_c05_pair_correlations(pool):
    out = verify.prop1_desk_scale(pool, (10**5, 10**6, N))
    assert out.seconds < 180
    check(out)


@pytest.mark.slow
def test_c06_prime_correlation(pool):
    check(verify.prop2_desk_scale(pool, N))


@pytest.mark.slow
def test_c07_moment_sums(pool):
    check(verify.prop4_desk_scale(pool, N))


def test_c08_counting_oracles():
    check(verify.counting_oracles())


@pytest.mark.slow
def test_c09_inequality_checks(pool):
    check(verify.inequality_checks(pool, N))


def test_c10_bounds_table():
    check(verify.bounds_digits())


@pytest.mark.slow
def test_c11_sign_experiment(pool):
    out = verify.sign_experiment(pool, N)
    for row in out.measured["k=2"]:
        print("k=2 (report only):", {k: row[k] for k in ("lambda", "rho", "Q_a", "S_k", "agree")})
    check(out)
