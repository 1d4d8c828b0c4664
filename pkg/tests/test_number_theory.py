import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from primecoupling.number_theory import (
    EULER_GAMMA,
    MERTENS_B,
    ConfigError,
    DomainError,
    MertensMap,
    build_tables,
    chebyshev_R,
    factor,
    get_tables,
    harmonic_number,
    iter_partitions,
    recompute_mertens_b,
    von_mangoldt_array,
)


def brute_spf(m):
    for d in range(2, int(math.isqrt(m)) + 1):
        if m % d == 0:
            return d
    return m


def test_primes_and_pi(small_tables):
    pr = small_tables.primes
    assert list(pr[:10]) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert small_tables.pi(10**4) == 1229
    assert small_tables.pi(1) == 0 and small_tables.pi(2) == 1
    xs = np.array([0, 1, 2, 10, 100, 1000])
    assert list(small_tables.pi(xs)) == [0, 0, 1, 4, 25, 168]


def test_pi_known_values(tables):
    assert tables.pi(10**6) == 78498
    assert tables.pi(10**5) == 9592


@given(st.integers(min_value=2, max_value=10**4))
def test_spf_is_least_prime_divisor(m):
    t = get_tables(10**4)
    s = int(t.spf[m])
    assert m % s == 0 and s == brute_spf(m)


@given(st.integers(min_value=1, max_value=10**6))
@settings(max_examples=300)
def test_factor_roundtrip(m):
    t = get_tables(10**6)
    f = factor(m, t)
    assert math.prod(p ** k for p, k in f.multiplicities.items()) == m
    assert f.big_omega == sum(f.multiplicities.values())
    assert f.omega == len(f.multiplicities)
    assert sorted(f.prime_multiset()) == f.prime_multiset()
    assert all(brute_spf(p) == p for p in f.multiplicities)


def test_factor_errors(small_tables):
    with pytest.raises(DomainError):
        factor(0, small_tables)
    with pytest.raises(DomainError):
        factor(10**4 + 1, small_tables)
    no_spf = build_tables(100, with_spf=False)
    with pytest.raises(DomainError):
        factor(12, no_spf)


def test_prime_powers(small_tables):
    t = small_tables
    assert np.all(np.diff(t.pp_q) > 0)
    assert np.all(t.pp_p.astype(object) ** t.pp_k.astype(object) == t.pp_q.astype(object))
    assert t.pp_q[-1] <= t.limit
    # count of prime powers up to 100: 25 primes + 4,8,16,32,64,9,27,81,25,49
    assert int(np.sum(t.pp_q <= 100)) == 35


def test_table_limit_guard():
    with pytest.raises(ConfigError):
        build_tables(10**9)


def test_checksum_is_stable():
    assert build_tables(1000).checksum() == build_tables(1000).checksum()
    assert build_tables(1000).checksum() != build_tables(1001).checksum()


def test_mertens_b_recomputed(tables):
    assert abs(recompute_mertens_b(10**6, tables) - 0.261497) <= 1e-6
    assert abs(recompute_mertens_b(10**6, tables) - MERTENS_B) <= 1e-8


def test_von_mangoldt_and_chebyshev(small_tables):
    lam = von_mangoldt_array(100, small_tables)
    assert lam[8] == pytest.approx(math.log(2))
    assert lam[12] == 0 and lam[1] == 0
    # psi(x) = sum of Lambda; compare with brute force at 100
    assert lam.sum() == pytest.approx(sum(math.log(p) * int(math.log(100, p) + 1e-12)
                                          for p in small_tables.primes_upto(100)))
    assert abs(chebyshev_R(10**4, small_tables)) < 1.0


def test_harmonic_number():
    assert harmonic_number(1) == 1.0
    assert harmonic_number(10) == pytest.approx(sum(1 / k for k in range(1, 11)), rel=1e-14)
    assert harmonic_number(10**7) == pytest.approx(math.log(10**7) + EULER_GAMMA, abs=1e-7)


def test_iter_partitions_counts():
    assert [sum(1 for _ in iter_partitions(z)) for z in range(1, 11)] == \
        [1, 2, 3, 5, 7, 11, 15, 22, 30, 42]
    assert all(sum(p) == 7 for p in iter_partitions(7))


class TestMertensMap:
    def test_jumps_kq(self, small_tables):
        mm = MertensMap(small_tables)
        for q, p, k in [(2, 2, 1), (4, 2, 2), (9, 3, 2), (7, 7, 1)]:
            x = math.log(q)
            assert mm.f(x) - mm.f(x - 1e-9) == pytest.approx(1 / (k * q), rel=1e-9)
        assert np.all(np.diff(mm.breaks) > 0)
        assert mm.f(0.1) == pytest.approx(-EULER_GAMMA)

    def test_jumps_p(self, small_tables):
        mm = MertensMap(small_tables, "p")
        assert mm.f(math.log(5)) - mm.f(math.log(5) - 1e-9) == pytest.approx(1 / 5)
        assert mm.f(math.log(4)) - mm.f(math.log(4) - 1e-9) == 0.0

    def test_f_close_to_log(self, tables):
        mm = MertensMap(tables)
        x = np.linspace(3, 13, 50)
        assert np.max(np.abs(mm.f(x) - np.log(x))) < 0.05

    def test_h_inverts_f(self, small_tables):
        mm = MertensMap(small_tables)
        y = np.linspace(0.01, 8, 400)
        h = mm.h(y)
        q, p, k = mm.h_prime_power(y)
        pos = h > 0
        # h(y) = log q with log y in (f(log q^-), f(log q)]
        ly = np.log(y)
        assert np.allclose(np.exp(h[pos]), q[pos])
        assert np.all(mm.f(h[pos]) >= ly[pos] - 1e-12)
        assert np.all(mm.f(h[pos] - 1e-9) < ly[pos])
        assert np.all(ly[~pos] <= mm.offset + 1e-12)
        assert np.all(q[~pos] == 1)

    def test_ratio_max(self, tables):
        assert MertensMap(tables).ratio_max() == pytest.approx(1.3355, abs=1e-3)

    def test_b0(self, tables):
        val, tail = MertensMap(tables).b0_integral()
        assert 0.70 < val < 0.71
        assert tail <= 1e-4

    def test_unknown_variant(self, small_tables):
        with pytest.raises(ConfigError):
            MertensMap(small_tables, "x")
