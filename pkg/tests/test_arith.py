import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallgaps.arith import (
    CacheError,
    CapacityError,
    WindowError,
    build_tables,
    cache_path,
    cached_tables,
    load_table,
    psi,
    psi_interval,
    save_table,
    short_interval_psi,
    small_primes,
)

from conftest import factorize, mangoldt, mobius

ORACLE_LIMIT = 10**4


@pytest.fixture(scope="module")
def prefix():
    return build_tables(1, ORACLE_LIMIT)


def test_small_window_examples():
    t = build_tables(1, 30)
    assert (t[6][0], t[12][0], t[30][0]) == (1, 0, -1)
    assert t[8][1] == math.log(2)
    assert t[9][1] == math.log(3)
    assert t[10][1] == 0.0


def test_prime_count_100():
    assert int(build_tables(1, 100).is_prime.sum()) == 25


def test_against_trial_division(prefix):
    for n in range(1, ORACLE_LIMIT + 1):
        i = n - 1
        f = factorize(n)
        assert prefix.mu[i] == mobius(n), n
        assert prefix.lam[i] == pytest.approx(mangoldt(n), abs=0), n
        assert prefix.is_prime[i] == (len(f) == 1 and next(iter(f.values())) == 1)
        assert prefix.spf[i] == (min(f) if f else 1)
        assert prefix.divisor_count[i] == math.prod(e + 1 for e in f.values())
        assert prefix.totient[i] == math.prod((p - 1) * p ** (e - 1) for p, e in f.items())


def test_mertens_identity(prefix):
    mu = prefix.mu.astype(np.int64)
    n = np.arange(1, ORACLE_LIMIT + 1)
    for x in list(range(1, 300)) + [997, 5000, ORACLE_LIMIT]:
        assert int(np.sum(mu[:x] * (x // n[:x]))) == 1


def test_mu_zero_iff_square_factor(prefix):
    squareful = np.zeros(ORACLE_LIMIT + 1, dtype=bool)
    for p in small_primes(100).tolist():
        squareful[p * p :: p * p] = True
    assert np.array_equal(prefix.mu == 0, squareful[1:])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2 * 10**6), st.integers(1, 3000))
def test_windows_agree_with_prefix_sieve(start, length):
    w = build_tables(start, length)
    full = build_tables(1, start + length - 1)
    sl = slice(start - 1, start - 1 + length)
    assert np.array_equal(w.spf, full.spf[sl])
    assert np.array_equal(w.mu, full.mu[sl])
    assert np.array_equal(w.lam, full.lam[sl])
    assert np.array_equal(w.divisor_count, full.divisor_count[sl])
    assert np.array_equal(w.totient, full.totient[sl])


def test_psi_values():
    t = build_tables(1, 10**6)
    assert psi(1, t) == 0.0
    expected = math.fsum(math.log(p) for p in (2, 3, 2, 5, 7, 2, 3))
    assert psi(10, t) == pytest.approx(expected, rel=1e-15)
    assert 0.99 < psi(10**6, t) / 10**6 < 1.01
    xs = list(range(1, 2000))
    vals = [psi(x, t) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_psi_interval_values():
    t = build_tables(1, 100)
    assert psi_interval(40, 0, t) == 0.0
    assert psi_interval(10, 3, t) == pytest.approx(math.log(11) + math.log(13), rel=1e-15)
    # 16 = 2^4 lies in (14, 16]
    assert psi_interval(14, 2, t) == pytest.approx(math.log(2), rel=1e-15)
    for n in range(1, 80):
        assert psi_interval(n, 7, t) == pytest.approx(psi(n + 7, t) - psi(n, t), abs=1e-12)


def test_short_interval_psi_matches_pointwise():
    t = build_tables(500, 400)
    arr = short_interval_psi(t, 500, 800, 9)
    for i, n in enumerate(range(500, 800)):
        assert arr[i] == pytest.approx(psi_interval(n, 9, t), abs=1e-12)


def test_errors():
    t = build_tables(100, 50)
    with pytest.raises(WindowError):
        psi(10, t)
    with pytest.raises(WindowError):
        psi_interval(140, 20, t)
    with pytest.raises(CapacityError):
        build_tables(1, 10**6, max_len=1000)
    with pytest.raises(ValueError):
        build_tables(0, 10)


def test_cache_round_trip(tmp_path):
    t = cached_tables(1000, 5000, tmp_path)
    path = cache_path(tmp_path, 1000, 5000)
    raw = path.read_bytes()
    assert raw[:4] == b"PGL1"
    assert int.from_bytes(raw[4:12], "little") == 1000
    assert int.from_bytes(raw[12:20], "little") == 5000
    assert len(raw) == 20 + 8 * 5000
    again = load_table(path)
    for name in ("spf", "mu", "lam", "is_prime"):
        assert np.array_equal(getattr(t, name), getattr(again, name))


@pytest.mark.parametrize(
    "damage",
    [
        lambda raw: raw[:10],
        lambda raw: b"XXXX" + raw[4:],
        lambda raw: raw[:-8],
        lambda raw: raw[:20] + (7).to_bytes(8, "little") + raw[28:],  # spf(1000) = 7 is wrong
    ],
)
def test_corrupt_cache_is_rebuilt(tmp_path, caplog, damage):
    cached_tables(1000, 500, tmp_path)
    path = cache_path(tmp_path, 1000, 500)
    path.write_bytes(damage(path.read_bytes()))
    with pytest.raises(CacheError):
        load_table(path)
    with caplog.at_level(logging.WARNING):
        t = cached_tables(1000, 500, tmp_path)
    assert "corrupt cache" in caplog.text
    assert np.array_equal(t.spf, build_tables(1000, 500).spf)
    load_table(path)


def test_save_table_explicit_path(tmp_path):
    t = build_tables(1, 64)
    p = save_table(t, tmp_path / "sub" / "x.pgl")
    assert np.array_equal(load_table(p).mu, t.mu)
