import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from primecoupling.number_theory import ConfigError, DomainError
from primecoupling.samplers import (
    RandomSource,
    janson_prefix,
    labeled_square_counts,
    sample_geometric,
    sample_harmonic,
    sample_labeled_square,
    sample_pd,
    sample_pd_largest,
    sample_scale_invariant_window,
    sample_translation_window,
    sample_uniform_factored,
    size_biased_order,
    spacing_counts,
    split_by_cycles,
    split_geometric,
    split_weights,
    window_sum,
)

SEEDS = (7, 1009, 524287)


def test_random_source_reproducible():
    a = RandomSource(7, 3).generator().random(5)
    b = RandomSource(7, 3).generator().random(5)
    c = RandomSource(7, 4).generator().random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert RandomSource(7).child(1) != RandomSource(7).child(2)


@pytest.mark.parametrize("seed", SEEDS)
def test_geometric_tail(seed):
    a = 1 / 3
    z = sample_geometric(a, RandomSource(seed).generator(), size=200_000)
    for k in range(1, 6):
        p = float(np.mean(z >= k))
        se = math.sqrt(a ** k * (1 - a ** k) / len(z))
        assert abs(p - a ** k) <= 3 * se


def test_geometric_edge_cases(gen):
    assert sample_geometric(0.0, gen) == 0
    with pytest.raises(DomainError):
        sample_geometric(1.0, gen)


def test_size_biased_first_item():
    items = [("a", 1.0), ("b", 2.0), ("c", 5.0)]
    gen = RandomSource(7).generator()
    firsts = [size_biased_order(items, gen)[0].identity for _ in range(20_000)]
    obs = [firsts.count(k) for k in "abc"]
    assert stats.chisquare(obs, np.array([1, 2, 5]) / 8 * 20_000).pvalue > 0.01


def test_size_biased_labels_increase(gen):
    out = size_biased_order([(i, i + 0.5) for i in range(30)], gen)
    labels = [it.label for it in out]
    assert labels == sorted(labels) and min(labels) > 0
    assert size_biased_order([], gen) == []
    with pytest.raises(DomainError):
        size_biased_order([("x", 0.0)], gen)


def test_split_weights_normalised():
    parts, w = split_weights(6, 0.5)
    assert w.sum() == pytest.approx(1.0)
    assert len(parts) == 11
    # Cauchy: P(all ones) = 1/6!, P(one 6-cycle) = 1/6
    d = dict(zip(parts, w))
    assert d[(1,) * 6] == pytest.approx(1 / 720)
    assert d[(6,)] == pytest.approx(1 / 6)
    # z = 2: {two 1s} and {one 2} have weights a^2/2 each, whatever a is
    for a in (0.1, 0.5, 0.9):
        parts, w = split_weights(2, a)
        assert dict(zip(parts, w)) == pytest.approx({(2,): 0.5, (1, 1): 0.5})


def test_split_geometric_basic(gen):
    assert split_geometric(0, 0.5, gen) == {}
    assert split_geometric(1, 0.5, gen) == {1: 1}
    with pytest.raises(ConfigError):
        split_geometric(61, 0.5, gen)
    out = split_geometric(9, 0.5, gen)
    assert sum(k * m for k, m in out.items()) == 9


def test_split_composes_to_independent_poisson():
    # Z ~ geometric(a) then split gives independent A_k ~ Poisson(a^k / k)
    a = 0.5
    gen = RandomSource(1009).generator()
    trials = 60_000
    a1 = np.zeros(trials, dtype=int)
    a2 = np.zeros(trials, dtype=int)
    for t in range(trials):
        z = sample_geometric(a, gen)
        s = split_geometric(z, a, gen)
        a1[t], a2[t] = s.get(1, 0), s.get(2, 0)
    for arr, lam in ((a1, a), (a2, a * a / 2)):
        assert abs(arr.mean() - lam) <= 3 * math.sqrt(lam / trials)
    # independence: covariance near zero
    assert abs(np.cov(a1, a2)[0, 1]) <= 3 * math.sqrt(a * a * a / 2 / trials)


def test_split_by_cycles_same_law():
    gen = RandomSource(7).generator()
    parts, w = split_weights(5, 0.3)
    idx = {p: i for i, p in enumerate(parts)}
    obs = np.zeros(len(parts))
    for _ in range(30_000):
        obs[idx[tuple(sorted(split_by_cycles(5, gen), reverse=True))]] += 1
    assert stats.chisquare(obs, w * 30_000).pvalue > 0.01


def test_harmonic_sampler():
    n = 20
    x = sample_harmonic(n, RandomSource(7).generator(), size=100_000)
    p = (1 / np.arange(1, n + 1))
    p /= p.sum()
    obs = np.bincount(x, minlength=n + 1)[1:]
    assert stats.chisquare(obs, p * len(x)).pvalue > 0.01


def test_uniform_factored(small_tables, gen):
    f = sample_uniform_factored(1000, small_tables, gen)
    assert 1 <= f.value <= 1000


@pytest.mark.parametrize("seed", SEEDS)
def test_window_empty_probability(seed):
    gen = RandomSource(seed).generator()
    empty = np.mean([len(sample_scale_invariant_window(1.0, 2.0, gen)) == 0 for _ in range(20_000)])
    assert abs(empty - 0.5) <= 3 * math.sqrt(0.25 / 20_000)


def test_window_mean_count_and_order():
    gen = RandomSource(7).generator()
    counts = [len(sample_scale_invariant_window(1.0, math.e, gen)) for _ in range(20_000)]
    assert abs(np.mean(counts) - 1) <= 3 * math.sqrt(1 / 20_000)
    w = sample_scale_invariant_window(1e-3, 1e3, gen)
    assert np.all(np.diff(w) < 0) and np.all((w > 1e-3) & (w < 1e3))
    with pytest.raises(DomainError):
        sample_scale_invariant_window(0.0, 1.0, gen)


def test_exponential_map_equivalence():
    g1, g2 = RandomSource(7, 1).generator(), RandomSource(7, 2).generator()
    a = np.concatenate([sample_scale_invariant_window(1.0, 10.0, g1) for _ in range(5000)])
    b = np.exp(np.concatenate([sample_translation_window(0.0, math.log(10.0), g2)
                               for _ in range(5000)]))
    assert stats.ks_2samp(a, b).pvalue > 0.01


@pytest.mark.parametrize("ab", [(1.0, 2.0), (2.0, 4.0), (1.0, math.e)])
def test_spacing_lemma_counts(ab):
    a, b = ab
    c, trunc = spacing_counts(a, b, 50_000, RandomSource(7).generator())
    se = c.std() / math.sqrt(len(c))
    assert abs(c.mean() - math.log(b / a)) <= 3 * se + trunc


def test_labeled_square_mean():
    c = labeled_square_counts(5.0, 100_000, RandomSource(7).generator())
    assert abs(c.mean() - 3.796) <= 3 * c.std() / math.sqrt(len(c)) + 1e-3
    pts = sample_labeled_square(5.0, RandomSource(7).generator())
    assert pts.shape[1] == 2 and np.all((pts > 0) & (pts <= 5.0))
    assert labeled_square_counts(1e-4, 1000, RandomSource(7).generator()).sum() == 0


@given(st.integers(min_value=0, max_value=2**32), st.floats(min_value=1e-10, max_value=1e-2))
@settings(max_examples=50, deadline=None)
def test_pd_vector_mass(seed, tol):
    v = sample_pd(RandomSource(seed).generator(), mass_tol=tol)
    assert np.all(np.diff(v.components) <= 0)
    total = v.components.sum()
    assert 1 - tol <= total + 1e-12 and total <= 1 + 1e-12
    assert total + v.residual_mass == pytest.approx(1.0)


@pytest.mark.parametrize("seed", SEEDS)
def test_pd_first_point_uniform(seed):
    gen = RandomSource(seed).generator()
    x1 = np.array([1 - sample_pd(gen, 1e-3).spacings[0] for _ in range(5000)])
    assert stats.kstest(x1, "uniform").pvalue > 0.01


def test_pd_largest_dickman():
    v = sample_pd_largest(10**6, RandomSource(7).generator())
    p = float(np.mean(v <= 0.5))
    assert abs(p - (1 - math.log(2))) <= 3 * math.sqrt(p * (1 - p) / len(v))
    assert np.all((v > 0) & (v <= 1))


def test_janson_max_label_is_exponential():
    gen = RandomSource(7).generator()
    tops = []
    for _ in range(3000):
        sizes, labels, m = janson_prefix(30, gen)
        tops.append(max(m, labels[0] if len(labels) else 0.0))
    assert stats.kstest(tops, "expon").pvalue > 0.01


def test_window_sum_matches_intensity():
    # E sum X 1(X < 1) over dx/x on (1e-6, 1) equals 1 - 1e-6
    s = window_sum(lambda x: x, 1e-6, 1.0, 50_000, RandomSource(7).generator())
    assert abs(s.mean() - (1 - 1e-6)) <= 3 * s.std() / math.sqrt(len(s))
