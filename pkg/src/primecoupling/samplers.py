"""Elementary random objects: geometric and Poisson counts, size-biased
orderings, split multiplicities, Poisson processes and Poisson-Dirichlet
vectors.

Randomness always comes from an explicit ``numpy.random.Generator``; use
:class:`RandomSource` to derive independent, reproducible streams.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from .number_theory import ConfigError, DomainError, PrimeTables, factor, iter_partitions


@dataclass(frozen=True)
class RandomSource:
    """A seed plus a stream id; ``generator()`` gives a fresh PCG64 stream.

    Distinct ``stream_id`` values give statistically independent streams, and
    the same pair always reproduces the same stream.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, k: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream_id * 1_000_003 + k + 1)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    return np.random.default_rng(rng)


def sample_geometric(a: float, rng, size=None):
    """``P(Z = k) = (1 - a) a^k`` for ``k >= 0``, by inversion of one uniform."""
    if not 0.0 <= a < 1.0:
        raise DomainError(f"geometric parameter must lie in [0, 1), got {a}")
    gen = as_generator(rng)
    u = 1.0 - gen.random(size)
    if a == 0.0:
        return np.zeros_like(u, dtype=np.int64) if size is not None else 0
    z = np.floor(np.log(u) / math.log(a)).astype(np.int64)
    return z if size is not None else int(z)


def sample_poisson(lam: float, rng, size=None):
    if lam < 0:
        raise DomainError("Poisson mean must be non-negative")
    return as_generator(rng).poisson(lam, size)


def sample_exponential(rate: float, rng, size=None):
    if rate <= 0:
        raise DomainError("exponential rate must be positive")
    return as_generator(rng).exponential(1.0 / rate, size)


@dataclass(frozen=True)
class WeightedItem:
    """An object with a positive weight and its exponential label ``S/weight``."""

    identity: object
    weight: float
    label: float


def size_biased_order(items: Sequence[Tuple[object, float]], rng) -> List[WeightedItem]:
    """Attach labels ``S_i / w_i`` (``S_i`` iid Exp(1)) and sort by increasing label.

    ``items`` holds ``(identity, weight)`` pairs.  The label is the ring time
    of an alarm clock with rate ``w_i``, so the first element of the result
    is item ``i`` with probability ``w_i / sum(w)``, and so on recursively.
    """
    if len(items) == 0:
        return []
    w = np.array([float(x[1]) for x in items])
    if np.any(w <= 0):
        raise DomainError("size-biased weights must be positive")
    gen = as_generator(rng)
    labels = gen.standard_exponential(len(w)) / w
    while len(np.unique(labels)) < len(labels):  # probability zero, but be safe
        labels = gen.standard_exponential(len(w)) / w
    order = np.argsort(labels, kind="stable")
    return [WeightedItem(items[i][0], float(w[i]), float(labels[i])) for i in order]


@lru_cache(maxsize=64)
def _partition_table(z: int):
    parts = list(iter_partitions(z))
    logw = []
    for part in parts:
        counts = {}
        for k in part:
            counts[k] = counts.get(k, 0) + 1
        logw.append(-sum(m * math.log(k) + math.lgamma(m + 1) for k, m in counts.items()))
    w = np.exp(np.array(logw))
    cdf = np.cumsum(w)
    return parts, cdf / cdf[-1], w


def split_weights(z: int, a: float) -> Tuple[list, np.ndarray]:
    """All splits ``(m_1, m_2, ...)`` with ``sum k m_k = z`` and their probabilities.

    The weight ``prod (a^k/k)^{m_k} / m_k!`` is ``a^z`` times Cauchy's
    cycle-type weight, so the conditional law does not depend on ``a``.
    """
    if z < 0 or not 0 < a < 1:
        raise DomainError("need z >= 0 and 0 < a < 1")
    parts, _, w = _partition_table(z)
    return parts, w / w.sum()


def split_geometric(z: int, a: float, rng) -> dict:
    """Split ``z`` into multiplicities ``{k: m_k}`` with ``sum k m_k = z``.

    Distributed as the ``A``-counts of independent ``Poisson(a^k/k)`` given
    their weighted sum ``z``; computed by enumerating partitions of ``z``.
    """
    if z < 0:
        raise DomainError("z must be non-negative")
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    if z == 0:
        return {}
    if z > 60:
        raise ConfigError("split_geometric enumerates partitions; z > 60 is not supported")
    parts, cdf, _ = _partition_table(z)
    u = as_generator(rng).random()
    part = parts[int(np.searchsorted(cdf, u, side="right"))]
    out: dict = {}
    for k in part:
        out[k] = out.get(k, 0) + 1
    return out


def split_by_cycles(z: int, rng) -> List[int]:
    """Same law as :func:`split_geometric`, as a list of part sizes.

    Peels off a part of size uniform on ``1..r`` from the remainder ``r``,
    which is the cycle structure of a uniform random permutation.
    """
    gen = as_generator(rng)
    out = []
    r = z
    while r > 0:
        k = 1 if r == 1 else min(r, 1 + int(gen.random() * r))
        out.append(k)
        r -= k
    return out


def sample_harmonic(n: int, rng, size=None):
    """``P(J = i) = 1 / (i H_n)`` on ``1..n``."""
    if n < 1:
        raise DomainError("n must be positive")
    cdf = np.cumsum(1.0 / np.arange(1, n + 1))
    cdf /= cdf[-1]
    u = as_generator(rng).random(size)
    out = np.searchsorted(cdf, u, side="right") + 1
    out = np.minimum(out, n)
    return out if size is not None else int(out)


def sample_uniform_factored(n: int, tables: PrimeTables, rng):
    """A uniform integer in ``1..n`` together with its factorisation."""
    if n < 1:
        raise DomainError("n must be positive")
    m = int(as_generator(rng).integers(1, n + 1))
    return factor(m, tables)


def sample_scale_invariant_window(lo: float, hi: float, rng) -> np.ndarray:
    """Points of the process with intensity ``dx/x`` on ``(lo, hi)``, decreasing."""
    if not 0 < lo < hi:
        raise DomainError("need 0 < lo < hi")
    gen = as_generator(rng)
    span = math.log(hi / lo)
    k = gen.poisson(span)
    pts = lo * np.exp(span * gen.random(k))
    return np.sort(pts)[::-1]


def sample_translation_window(a: float, b: float, rng) -> np.ndarray:
    """Unit-rate Poisson process on ``(a, b)``, increasing."""
    if not a < b:
        raise DomainError("need a < b")
    gen = as_generator(rng)
    k = gen.poisson(b - a)
    return np.sort(a + (b - a) * gen.random(k))


def sample_labeled_square(b: float, rng) -> np.ndarray:
    """Points ``(w, y)`` of the process with intensity ``exp(-w y)`` on ``(0, b]^2``.

    Thins a rate-one process on the square, keeping each point with
    probability ``exp(-w y)``.  Returns an array of shape ``(k, 2)``.
    """
    if b <= 0:
        raise DomainError("b must be positive")
    gen = as_generator(rng)
    k = gen.poisson(b * b)
    pts = b * gen.random((k, 2))
    keep = gen.random(k) < np.exp(-pts[:, 0] * pts[:, 1])
    return pts[keep]


@dataclass
class PDVector:
    """Ranked Poisson-Dirichlet(1) components and the unresolved remainder."""

    components: np.ndarray
    residual_mass: float = 0.0
    spacings: np.ndarray = field(default=None, repr=False)


def sample_pd(rng, mass_tol: float = 1e-12) -> PDVector:
    """Stick breaking: ``X_0 = 1``, ``X_{k+1} = U X_k``; spacings ranked.

    Stops once the unbroken remainder falls below ``mass_tol``.
    """
    if not 0 < mass_tol < 1:
        raise DomainError("mass_tol must lie in (0, 1)")
    gen = as_generator(rng)
    x = 1.0
    sp = []
    while x >= mass_tol:
        nx = x * gen.random()
        sp.append(x - nx)
        x = nx
    sp = np.array(sp)
    return PDVector(np.sort(sp)[::-1], x, sp)


def sample_pd_largest(size: int, rng) -> np.ndarray:
    """Largest Poisson-Dirichlet(1) component, ``size`` independent copies.

    Stick breaking stops once the remainder is smaller than the running
    maximum, since no later piece can exceed it.
    """
    gen = as_generator(rng)
    x = np.ones(size)
    best = np.zeros(size)
    active = np.arange(size)
    while len(active):
        xa = x[active]
        nx = xa * gen.random(len(active))
        best[active] = np.maximum(best[active], xa - nx)
        x[active] = nx
        active = active[nx > best[active]]
    return best


def janson_prefix(length: int, rng) -> Tuple[np.ndarray, np.ndarray, float]:
    """Items ``i <= length`` with counts ``Poisson(1/i)`` and labels ``S/i``.

    Returns ``(sizes, labels, M)`` with the items sorted by decreasing label
    and ``M`` an independent draw of the largest label among the items
    ``i > length``, so that ``P(M <= t) = exp(-sum_{i>L} e^{-i t}/i)``.  The
    largest label of the full process is Exp(1).
    """
    gen = as_generator(rng)
    idx = np.arange(1, length + 1)
    z = gen.poisson(1.0 / idx)
    sizes = np.repeat(idx, z)
    labels = gen.standard_exponential(len(sizes)) / sizes
    order = np.argsort(-labels)
    g = gen.standard_exponential()

    def tail(t):
        return -math.log1p(-math.exp(-t)) - float(np.sum(np.exp(-idx * t) / idx))

    lo, hi = 1e-12, 50.0
    if tail(lo) < g:
        return sizes[order], labels[order], 0.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if tail(mid) > g:
            lo = mid
        else:
            hi = mid
    return sizes[order], labels[order], math.sqrt(lo * hi)


def _flat_windows(lo: float, hi: float, runs: int, gen):
    """Points of ``runs`` independent dx/x windows on ``(lo, hi)``, flattened.

    Returns ``(run_index, points)`` sorted by run and, within a run, by
    decreasing position.
    """
    span = math.log(hi / lo)
    counts = gen.poisson(span, runs)
    pts = lo * np.exp(span * gen.random(int(counts.sum())))
    run = np.repeat(np.arange(runs), counts)
    order = np.lexsort((-pts, run))
    return run[order], pts[order]


def scale_invariant_window_counts(a: float, b: float, runs: int, rng) -> np.ndarray:
    """Number of points in ``(a, b)`` for ``runs`` independent windows."""
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    gen = as_generator(rng)
    return gen.poisson(math.log(b / a), runs)


def spacing_counts(a: float, b: float, runs: int, rng, lo: float = 1e-6,
                   hi: float = 1e6) -> Tuple[np.ndarray, float]:
    """Counts of spacings ``X_i - X_{i+1}`` falling in ``(a, b)``, one per window.

    Each window holds the points of the dx/x process on ``(lo, hi)``; only
    spacings between two points of the window are counted.  The second
    return value bounds the expected number of spacings in ``(a, b)`` that
    the window misses: ``lo / a`` from below and ``(b - a) / hi`` from above.
    """
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    if not 0 < lo < a or hi <= b:
        raise DomainError("the window must strictly contain (a, b)")
    gen = as_generator(rng)
    run, pts = _flat_windows(lo, hi, runs, gen)
    same = run[1:] == run[:-1]
    gaps = pts[:-1] - pts[1:]
    hit = same & (gaps > a) & (gaps < b)
    counts = np.bincount(run[1:][hit], minlength=runs)
    return counts, lo / a + (b - a) / hi


def labeled_square_counts(b: float, runs: int, rng) -> np.ndarray:
    """Point counts of :func:`sample_labeled_square` for ``runs`` independent squares."""
    if b <= 0:
        raise DomainError("b must be positive")
    gen = as_generator(rng)
    k = gen.poisson(b * b, runs)
    tot = int(k.sum())
    w = b * gen.random(tot)
    y = b * gen.random(tot)
    keep = gen.random(tot) < np.exp(-w * y)
    return np.bincount(np.repeat(np.arange(runs), k)[keep], minlength=runs)


def window_sum(fn, lo: float, hi: float, runs: int, rng) -> np.ndarray:
    """``sum_i fn(X_i)`` over the points of each of ``runs`` dx/x windows on ``(lo, hi)``."""
    if not 0 < lo < hi:
        raise DomainError("need 0 < lo < hi")
    gen = as_generator(rng)
    run, pts = _flat_windows(lo, hi, runs, gen)
    return np.bincount(run, weights=fn(pts), minlength=runs)
