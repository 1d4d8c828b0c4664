"""Entropy bookkeeping: geometric and Poisson entropies, the extra information
in splitting a geometric count into Poisson prime-power counts, and the
entropy of the Feller indicators versus the cycle type of a permutation.

Every function takes an explicit ``base`` for the logarithm (``math.e`` for
nats, ``2`` for bits).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammainc

from .number_theory import ConfigError, DomainError, PrimeTables, get_tables, iter_partitions

_SERIES_CUT = 1e-16
_MAX_K = 100_000


@dataclass(frozen=True)
class EntropyReport:
    """A computed entropy-type quantity with its truncation error bound."""

    name: str
    value: float
    base: float
    truncation_error: float = 0.0

    def within(self, target: float, tol: float) -> bool:
        return abs(self.value - target) <= tol + self.truncation_error


def _scale(base: float) -> float:
    if base <= 0 or base == 1:
        raise DomainError("log base must be positive and different from 1")
    return math.log(base)


def geometric_entropy(a: float, base: float = math.e) -> float:
    """Entropy of ``P(Z = k) = (1 - a) a^k``."""
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    h = -math.log1p(-a) - a / (1 - a) * math.log(a)
    return h / _scale(base)


def geometric_entropy_series(a: float, base: float = math.e) -> float:
    """The same entropy as ``sum_k (a^k / k) (1 + log(1 / a^k))``."""
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    total = 0.0
    k = 1
    la = math.log(a)
    while True:
        x = a ** k / k
        total += x * (1 - k * la)
        if x * (1 - k * la) < _SERIES_CUT * 1e-3 or k > 10_000:
            break
        k += 1
    return total / _scale(base)


def _poisson_tail_logs(x: np.ndarray) -> np.ndarray:
    """``sum_{j >= 2} P(A >= j) log j`` for ``A ~ Poisson(x)``, elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    j = 2
    while True:
        # P(A >= j) is the regularised lower incomplete gamma P(j, x)
        tail = gammainc(j, x)
        out += tail * math.log(j)
        if np.all(tail < _SERIES_CUT):
            break
        j += 1
        if j > 10_000:
            raise ConfigError("Poisson mean too large for the tail series")
    return out


def poisson_entropy(x: float, base: float = math.e) -> float:
    """Entropy of Poisson(x) as ``x + x log(1/x) + sum_{j>=2} P(A >= j) log j``."""
    if x < 0:
        raise DomainError("Poisson mean must be non-negative")
    if x == 0:
        return 0.0
    h = x - x * math.log(x) + float(_poisson_tail_logs(np.array([x]))[0])
    return h / _scale(base)


def _partition_information_nats(a: np.ndarray) -> np.ndarray:
    # With x_k = a^k / k, the terms x_k + x_k log(1/x_k) - x_k (1 + log(1/a^k))
    # reduce to x_k log k, so no cancelling pair is ever formed numerically.
    a = np.asarray(a, dtype=float)
    total = np.zeros_like(a)
    for k in range(1, _MAX_K + 1):
        x = a ** k / k
        live = x >= _SERIES_CUT
        if not np.any(live):
            return total
        xs = x[live]
        total[live] += xs * math.log(k) + _poisson_tail_logs(xs)
    raise ConfigError("a is too close to 1 for the partition series")


def partition_information(a: float, base: float = math.e) -> float:
    """Entropy added by splitting a geometric(a) count into its Poisson parts.

    ``Z = sum_k k A_k`` with ``A_k ~ Poisson(a^k / k)``; the result is
    ``sum_k h(A_k) - h(Z)``, which behaves like ``a^2 log 2`` for small ``a``.
    """
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    return float(_partition_information_nats(np.array([a]))[0]) / _scale(base)


def partition_information_direct(a: float, base: float = math.e) -> float:
    """Same quantity as a literal difference of entropies (cross-check)."""
    total = 0.0
    k = 1
    while a ** k / k >= _SERIES_CUT:
        total += poisson_entropy(a ** k / k)
        k += 1
    return (total - geometric_entropy(a)) / _scale(base)


def prime_partition_information(limit: int = 10**6, base: float = 2.0,
                                tables: Optional[PrimeTables] = None) -> EntropyReport:
    """``sum_p d(1/p)`` over primes ``p <= limit`` plus a bound on the rest.

    For ``a <= 1e-3``, ``d(a) <= 1.01 a^2 log 2``; with ``pi(x) < 1.26 x / log x``
    the omitted primes contribute at most ``1.01 * 2.52 log 2 / (X log X)`` nats.
    """
    if limit < 1000:
        raise DomainError("limit must be at least 1000 for the tail bound")
    tables = tables or get_tables(max(limit, 1000), with_spf=False)
    if tables.limit < limit:
        raise ConfigError("prime tables do not reach the requested limit")
    primes = tables.primes_upto(limit).astype(float)
    vals = _partition_information_nats(1.0 / primes)
    s = float(math.fsum(vals.tolist()))
    tail = 1.01 * 2.52 * math.log(2) / (limit * math.log(limit))
    sc = _scale(base)
    return EntropyReport("sum_p d(1/p)", s / sc, base, tail / sc)


@dataclass(frozen=True)
class XiEntropy:
    """Entropy of the indicators ``xi_1..xi_n`` three ways."""

    n: int
    direct: float
    closed_form: float
    asymptote: float
    base: float


def xi_entropy_sum(n: int, base: float = math.e) -> XiEntropy:
    """``sum_{i<=n} h(xi_i)`` with ``xi_i ~ Bernoulli(1/i)``.

    ``direct`` sums the binary entropies.  ``closed_form`` is the telescoped
    ``log n + sum_{i=1}^{n-1} log(i) / (i + 1)``, and ``asymptote`` is
    ``(log n)^2 / 2``.
    """
    if n < 1:
        raise DomainError("n must be positive")
    sc = _scale(base)
    i = np.arange(2, n + 1, dtype=float)
    p = 1.0 / i
    direct = float(np.sum(-p * np.log(p) - (1 - p) * np.log1p(-p)))
    j = np.arange(1, n, dtype=float)
    closed = math.log(n) + float(np.sum(np.log(j) / (j + 1)))
    return XiEntropy(n, direct / sc, closed / sc, math.log(n) ** 2 / 2 / sc, base)


def cycle_entropy_bruteforce(n: int, base: float = math.e) -> float:
    """Entropy of the cycle type of a uniform permutation of ``n`` objects.

    Enumerates partitions, each with Cauchy probability ``prod 1/(i^c_i c_i!)``.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if n > 40:
        raise ConfigError("partition enumeration is limited to n <= 40")
    terms = []
    for part in iter_partitions(n):
        counts: dict = {}
        for k in part:
            counts[k] = counts.get(k, 0) + 1
        logp = -sum(c * math.log(i) + math.lgamma(c + 1) for i, c in counts.items())
        terms.append(-math.exp(logp) * logp)
    return math.fsum(terms) / _scale(base)
