import math

import mpmath
import numpy as np
import pytest
from scipy import special

from primecoupling.exact_densities import (
    Pmf,
    QuadratureSpec,
    Uniformizer,
    build_tail_table,
    dickman_rho,
    dtv,
    dtv_forms,
    dtv_J_harmonic,
    g_fun,
    h_fun,
    label_tail,
    load_pmf,
    lower_b0_piece,
    pi_array,
    pmf_J,
    pmf_JP0,
    region_mean,
    save_pmf,
    zeta_near_one,
    zeta_regular,
)
from primecoupling.number_theory import ConfigError, DomainError


# ------------------------------------------------------------ zeta

def test_zeta_values_against_mpmath():
    assert zeta_near_one(1.0) == pytest.approx(math.pi ** 2 / 6, rel=1e-13)
    assert zeta_near_one(0.5) == pytest.approx(float(mpmath.zeta(1.5)), rel=1e-13)
    for d in (1e-8, 1e-4, 0.03, 0.7):
        with mpmath.workdps(40):
            want = float(mpmath.zeta(1 + mpmath.mpf(d)))
        assert zeta_near_one(d) == pytest.approx(want, rel=1e-12)


def test_zeta_regular_at_zero_is_stieltjes():
    r, dr = zeta_regular(0.0)
    assert r[0] == pytest.approx(float(mpmath.euler), abs=1e-13)
    assert dr[0] == pytest.approx(-float(mpmath.stieltjes(1)), abs=1e-12)


def test_zeta_pole_behaviour():
    for d in (1e-3, 1e-6, 1e-9):
        assert d * zeta_near_one(d) == pytest.approx(1.0, abs=2 * d)
    with pytest.raises(DomainError):
        zeta_near_one(0.0)
    with pytest.raises(DomainError):
        zeta_regular(-0.1)


# ------------------------------------------------------------ law of J and J P0

@pytest.mark.parametrize("n", [2, 10, 100, 1000, 10**4])
def test_pmf_J_normalised(tables, n):
    p = pmf_J(n, tables)
    assert p.total() == pytest.approx(1.0, abs=max(1e-9, p.tolerance))
    assert p.mass[0] == 0 and (p.mass >= 0).all()
    assert p.error_estimate < 1e-9


def test_pmf_J_bad_n(tables):
    with pytest.raises(DomainError):
        pmf_J(1, tables)
    with pytest.raises(DomainError):
        pmf_J(2 * 10**6, tables)


def test_J_close_to_harmonic_trend(tables):
    # (log n) * ||law(J) - harmonic||_1 stays bounded and shrinks slowly
    vals = [dtv_J_harmonic(n, tables) * math.log(n) for n in (100, 1000, 10**4)]
    assert max(vals) / min(vals) < 3
    assert vals[0] > vals[1] > vals[2]


def test_pmf_JP0_matches_naive_convolution(small_tables):
    n = 300
    pj = pmf_J(n, small_tables)
    f = pmf_JP0(n, small_tables, pj=pj)
    primes = [int(p) for p in small_tables.primes_upto(n)]
    pi = lambda x: sum(1 for p in primes if p <= x)  # noqa: E731
    naive = np.zeros(n + 1)
    for j in range(1, n + 1):
        w = pj.mass[j] / (1 + pi(n // j))
        naive[j] += w
        for p in primes:
            if j * p <= n:
                naive[j * p] += w
    assert np.allclose(f.mass, naive, atol=1e-15)
    assert f.total() == pytest.approx(1.0, abs=1e-9)


def test_pi_array(small_tables):
    pa = pi_array(30, small_tables)
    assert pa[1] == 0 and pa[2] == 1 and pa[10] == 4 and pa[30] == 10


def test_dtv_forms_agree(tables):
    for n in (50, 1000):
        a, b, c = dtv_forms(pmf_JP0(n, tables))
        assert a == pytest.approx(b, abs=1e-12) and a == pytest.approx(c, abs=1e-12)
    assert dtv(Pmf.uniform(10), Pmf.uniform(10)) == 0


def test_uniformizer_identity(tables):
    n = 1000
    u = Uniformizer.from_pmf(pmf_JP0(n, tables))
    g_inc = np.diff(u.gcum)
    out = u.f.mass[1:] * u.b[1:] + u.dtv * g_inc
    assert np.allclose(out, 1.0 / n, atol=1e-14)
    assert u.dtv == pytest.approx(dtv_forms(u.f)[0])


def test_h_fun_examples(small_tables):
    n = 100
    L = n * math.log(n)
    assert h_fun(n, 1, small_tables) == pytest.approx((math.log(n) - 1) / L)
    # 100 = 2^2 5^2: kernel 10, two distinct primes, log(n/m) = 0
    assert h_fun(n, 100, small_tables) == pytest.approx((math.log(10) - 3) / L)
    assert h_fun(n, 12, small_tables) == pytest.approx((math.log(6) + 3 * (math.log(100 / 12) - 1)) / L)
    with pytest.raises(DomainError):
        h_fun(n, 101, small_tables)


def test_g_fun_is_f_with_harmonic_J(small_tables):
    n = 500
    w = np.concatenate(([0.0], 1.0 / (np.arange(1, n + 1) * math.log(n))))
    fake = Pmf(n, w)
    assert np.allclose(g_fun(n, small_tables), pmf_JP0(n, small_tables, pj=fake).mass, rtol=1e-13)


def test_cache_roundtrip(tmp_path, tables):
    p = pmf_J(100, tables)
    path = str(tmp_path / "x" / "p.npz")
    save_pmf(path, p, {"kind": "test"})
    q = load_pmf(path)
    assert np.array_equal(p.mass, q.mass) and q.checksum == p.checksum
    assert load_pmf(str(tmp_path / "missing.npz")) is None
    (tmp_path / "junk.npz").write_bytes(b"not a zip")
    assert load_pmf(str(tmp_path / "junk.npz")) is None


def test_quadrature_spec_validation():
    with pytest.raises(ConfigError):
        QuadratureSpec(abs_tol=0)
    with pytest.raises(ConfigError):
        QuadratureSpec(max_subdivisions=2)


# ------------------------------------------------------------ label tail

@pytest.mark.parametrize("variant", ["kq", "p"])
def test_label_tail_direct_sum(tables, variant):
    n, t = 1000, 1.5
    pr = tables.primes[tables.primes > n].astype(float)
    x = pr ** (-1 - t)
    direct = -np.log1p(-x).sum() if variant == "kq" else np.log1p(x / (1 - 1 / pr)).sum()
    F, dF = label_tail(n, t, tables, variant)
    # primes beyond X = 1e6 add about X^-t / (t log X); the table stops there
    X = float(tables.limit)
    rest = X ** -t / (t * math.log(X))
    assert 0 < F[0] - direct < 2 * rest
    assert F[0] - direct == pytest.approx(rest, rel=0.2)
    h = 1e-6
    Fp, _ = label_tail(n, t + h, tables, variant)
    Fm, _ = label_tail(n, t - h, tables, variant)
    assert dF[0] == pytest.approx((Fp[0] - Fm[0]) / (2 * h), rel=1e-5)


def test_tail_table_accuracy(tables):
    tt = build_tail_table(1000, tables)
    assert tt.max_rel_error < 1e-6
    assert tt.model_error < 1e-3
    assert np.all(np.diff(tt.xs) > 0)


# ------------------------------------------------------------ Dickman and integrals

def test_dickman_known_values():
    assert dickman_rho(0.5) == 1.0 and dickman_rho(1.0) == 1.0 and dickman_rho(-1.0) == 0.0
    assert dickman_rho(2.0) == pytest.approx(1 - math.log(2), abs=1e-14)
    assert dickman_rho(1.5) == pytest.approx(1 - math.log(1.5), abs=1e-14)
    rho3 = 1 - (1 - math.log(2)) * math.log(3) + float(mpmath.polylog(2, -2)) + math.pi ** 2 / 12
    assert dickman_rho(3.0) == pytest.approx(rho3, abs=1e-13)
    u = 2.5
    closed = 1 - (1 - math.log(u - 1)) * math.log(u) + float(mpmath.polylog(2, 1 - u)) + math.pi ** 2 / 12
    assert dickman_rho(u) == pytest.approx(closed, abs=1e-13)


def test_dickman_delay_equation():
    u = np.linspace(1.2, 7.5, 40)
    h = 1e-5
    deriv = (dickman_rho(u + h) - dickman_rho(u - h)) / (2 * h)
    assert np.allclose(u * deriv, -dickman_rho(u - 1), atol=1e-8)
    assert dickman_rho(10.0) == pytest.approx(2.77017183772596e-11, rel=1e-8)


@pytest.mark.parametrize("b", [0.1, 1.0, 2.0, 5.0, 50.0])
def test_region_mean_closed_form(b):
    x = b * b
    ein = special.exp1(x) + math.log(x) + float(mpmath.euler)
    assert region_mean(b) == pytest.approx(ein, rel=1e-11)


def test_region_mean_value():
    assert region_mean(5.0) == pytest.approx(3.796, abs=5e-4)
    with pytest.raises(DomainError):
        region_mean(0.0)


def test_lower_b0_piece():
    g = float(mpmath.euler)
    val = float(mpmath.quad(lambda x: -g - mpmath.log(x), [0, math.log(2)]))
    assert lower_b0_piece() == pytest.approx(val, abs=1e-14)
