import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallgaps.arith import WindowError, build_tables
from smallgaps.correlations import (
    Lab,
    correlation_pair,
    correlation_with_prime,
    default_prop2_R,
    gallagher_moment,
    generalized_correlation,
    h_from_lambda,
    moment_M,
    moment_M_tilde,
    reports_to_csv,
    run_grid,
)
from smallgaps.tuples import TupleSet, singular_series

T = TupleSet
E = T()


def finite_R_density(R, shifts):
    """Exact mean of prod Lambda_R(n + s) over n, by CRT over squarefree d <= R.

    Independent of the sieve code: it sums mu(d_1)...mu(d_k) prod log(R/d_i)
    over divisor choices, weighted by the density of n meeting every
    congruence n = -s_i mod d_i.
    """
    cut = int(R)
    mu = build_tables(1, cut).mu
    ds = [d for d in range(1, cut + 1) if mu[d - 1]]
    total = []

    def rec(i, mod, res, w):
        if i == len(shifts):
            total.append(w / mod)
            return
        s = shifts[i]
        for d in ds:
            g = math.gcd(mod, d)
            if (res + s) % g:
                continue
            n = res
            while (n + s) % d:
                n += mod
            lcm = mod // g * d
            rec(i + 1, lcm, n % lcm, w * int(mu[d - 1]) * math.log(R / d))

    rec(0, 1, 0, 1.0)
    return math.fsum(total)


@pytest.fixture(scope="module")
def lab6():
    return Lab(10**6)


def test_empty_pair_is_N(lab6):
    rep = correlation_pair(E, E, 10**6, 100.0, lab6)
    assert rep.empirical == 10**6 and rep.predicted == 10**6 and rep.ratio == 1.0


def test_theta_recorded(lab6):
    R = lab6.R_from_theta(0.2)
    rep = correlation_pair(T([0]), T([0]), 10**6, R, lab6)
    assert abs(rep.params["theta"] - math.log(R) / math.log(10**6)) < 1e-12
    assert rep.ratio == rep.empirical / rep.predicted


@pytest.mark.parametrize("shifts", [[0, 0], [0, 2], [0, 6], [0, 0, 2], [0, 2, 2]])
def test_empirical_matches_exact_finite_R_density(lab6, shifts):
    R = lab6.R_from_theta(0.2)
    H1 = T([shifts[0]])
    H2 = T(shifts[1:]) if len(set(shifts[1:])) == len(shifts) - 1 else None
    if H2 is None:
        H1, H2 = T(set(shifts[:2])), T([shifts[2]])
    rep = correlation_pair(H1, H2, 10**6, R, lab6)
    assert rep.empirical / 10**6 == pytest.approx(finite_R_density(R, shifts), rel=2e-3)


def test_pair_examples(lab6):
    R = lab6.R_from_theta(0.2)
    r00 = correlation_pair(T([0]), T([0]), 10**6, R, lab6)
    assert 0.7 < r00.ratio < 1.3
    r02 = correlation_pair(T([0]), T([2]), 10**6, R, lab6)
    assert r02.predicted == pytest.approx(10**6 * singular_series(T([0, 2])).value)
    assert 0.6 < r02.ratio < 1.4


@settings(max_examples=10, deadline=None)
@given(
    st.lists(st.integers(0, 12), max_size=3, unique=True),
    st.lists(st.integers(0, 12), max_size=3, unique=True),
)
def test_pair_symmetry(a, b):
    lab = _small_lab()
    R = 12.0
    one = correlation_pair(T(a), T(b), lab.N, R, lab)
    two = correlation_pair(T(b), T(a), lab.N, R, lab)
    assert one.empirical == two.empirical and one.predicted == two.predicted


_SMALL = {}


def _small_lab():
    if "lab" not in _SMALL:
        _SMALL["lab"] = Lab(50_000)
    return _SMALL["lab"]


def test_inadmissible_union_flagged():
    lab = _small_lab()
    rep = correlation_pair(T([0, 2]), T([4]), lab.N, 10.0, lab)
    assert rep.predicted == 0.0 and rep.ratio is None and "inadmissible" in rep.note


def test_prime_predictions():
    lab = _small_lab()
    N, R = lab.N, 10.0
    a = correlation_with_prime(T([0]), T([0]), 2, N, R, lab)
    assert a.predicted == pytest.approx(N * singular_series(T([0, 2])).value * math.log(R))
    b = correlation_with_prime(T([0]), T([0]), 0, N, R, lab)
    assert b.predicted == pytest.approx(N * math.log(R) ** 2)


def test_default_prop2_R():
    N = 10**12
    assert default_prop2_R(1, N) == pytest.approx(10**6 / math.log(N) ** 3)
    # (log N)^3 swamps N^(1/2) at desk scale
    with pytest.raises(ValueError):
        default_prop2_R(1, 10**7)


def test_shift_outside_lab():
    lab = _small_lab()
    with pytest.raises(WindowError):
        correlation_with_prime(T([0]), T([0]), 10**4, lab.N, 10.0, lab)


def test_moment_predictions_depend_on_order_only(lab6):
    h, R = 14, lab6.R_from_theta(0.1)
    preds = {(i, j): moment_M(i, j, 10**6, h, R, lab6).predicted for i in range(3) for j in range(3)}
    assert preds[(0, 2)] == preds[(1, 1)] == preds[(2, 0)]
    assert preds[(1, 2)] == preds[(2, 1)]
    assert moment_M(0, 0, 10**6, h, R, lab6).empirical == 1.0
    assert moment_M(1, 0, 10**6, h, R, lab6).empirical == moment_M(0, 1, 10**6, h, R, lab6).empirical


def test_moment_unsupported_theta_flagged(lab6):
    rep = moment_M(2, 2, 10**6, 14, lab6.R_from_theta(0.3), lab6)
    assert "unsupported" in rep.note and rep.empirical > 0


def test_gallagher_edge_cases(lab6):
    assert gallagher_moment(0, 10**6, 14, lab6).empirical == 1.0
    with pytest.raises(ValueError):
        gallagher_moment(2, 10**6, 60, lab6)


def test_generalized(lab6):
    R = lab6.R_from_theta(0.2)
    H = T([0, 2, 6])
    g = generalized_correlation(H, [1, 1, 1], 10**6, R, lab6)
    p = correlation_pair(H, E, 10**6, R, lab6)
    assert g.empirical == pytest.approx(p.empirical, rel=1e-14) and g.predicted == pytest.approx(p.predicted)
    sq = generalized_correlation(T([0]), [2], 10**6, R, lab6)
    assert sq.predicted == pytest.approx(10**6 * math.log(R))
    cube = generalized_correlation(T([0]), [3], 10**6, R, lab6)
    assert cube.predicted is None and cube.empirical > 0


def test_grid_csv(tmp_path):
    rows = [
        {"h1": "0", "h2": "0", "h0": "", "N": "50000", "theta": "0.2", "R": ""},
        {"h1": "0", "h2": "", "h0": "2", "N": "50000", "theta": "", "R": "10"},
    ]
    reps = run_grid(rows)
    text = reports_to_csv(reps)
    assert text.splitlines()[0].startswith("kind,")
    assert len(text.splitlines()) == 3
    with pytest.raises(ValueError):
        run_grid([{"h1": "0", "h2": "0", "N": "50000", "theta": "0.2", "R": "10"}])


def test_thread_count_does_not_change_sums():
    one, four = Lab(3 * 10**6, threads=1), Lab(3 * 10**6, threads=4)
    a = correlation_pair(T([0]), T([2]), one.N, 19.0, one)
    b = correlation_pair(T([0]), T([2]), four.N, 19.0, four)
    assert a.empirical == b.empirical


# --- desk-scale, N = 10^7 ----------------------------------------------------


@pytest.mark.slow
def test_desk_scale_moments(pool):
    N = 10**7
    lab = pool(N)
    h = h_from_lambda(1.0, N)
    m10 = moment_M(1, 0, N, h, lab.R_from_theta(0.2), lab)
    assert abs(m10.empirical / 5 - 1) <= 0.3
    mt10 = moment_M_tilde(1, 0, N, h, lab.R_from_theta(0.1), lab)
    assert abs(mt10.empirical / 110 - 1) <= 0.35
    mt00 = moment_M_tilde(0, 0, N, h, lab.R_from_theta(0.25), lab)
    assert 3.2 < mt00.empirical < 4.8
    assert mt00.predicted == pytest.approx((h / math.log(N)) / 0.25, rel=1e-12)


@pytest.mark.slow
def test_desk_scale_gallagher(pool):
    N = 10**7
    lab = pool(N)
    h = h_from_lambda(1.0, N)
    assert 0.9 < gallagher_moment(1, N, h, lab).ratio < 1.1
    assert abs(gallagher_moment(2, N, h, lab).empirical / 2 - 1) <= 0.2


@pytest.mark.slow
def test_desk_scale_prime_correlations(pool):
    N = 10**7
    lab = pool(N)
    R = lab.R_from_theta(1 / 8)
    half = correlation_with_prime(T([0]), E, 2, N, R, lab)
    assert 0.6 < half.ratio < 1.4
    full = correlation_with_prime(T([0]), T([0]), 2, N, R, lab)
    primes = correlation_with_prime(T([0]), T([0]), 2, N, R, lab, primes_only=True)
    assert abs(primes.empirical / full.empirical - 1) < 1e-3
