"""Prime tables, factorisation and the Mertens step map.

The step map ``f`` sends ``x`` to ``-gamma + sum_{q <= e^x} 1/(k q)`` where
``q = p^k`` runs over prime powers.  It approximates ``log x`` from below and
above in turn, and its generalised inverse ``h`` rounds a positive real to the
log of a prime power.  Both are built once from a :class:`PrimeTables` object
and then shared read-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from . import kernels

EULER_GAMMA = 0.5772156649015329
MERTENS_B = 0.2614972128476428

MAX_TABLE_LIMIT = 10**8


class ConfigError(ValueError):
    """Raised for invalid sizes, limits or configuration values."""


class DomainError(ValueError):
    """Raised when an argument lies outside the domain a table can answer."""


@dataclass(frozen=True)
class PrimeTables:
    """Sieve output up to ``limit``.

    Attributes
    ----------
    limit : int
    spf : ndarray or None
        Smallest prime factor of each integer ``0..limit`` (0 and 1 map to 0);
        ``None`` for prime-only tables.
    primes : ndarray of int64
    pp_q, pp_p, pp_k : ndarray
        Prime powers ``q = p^k <= limit`` sorted by ``q``.
    """

    limit: int
    spf: np.ndarray = field(repr=False)
    primes: np.ndarray = field(repr=False)
    pp_q: np.ndarray = field(repr=False)
    pp_p: np.ndarray = field(repr=False)
    pp_k: np.ndarray = field(repr=False)

    def pi(self, x):
        """Prime counting function; accepts scalars or arrays with x <= limit."""
        xa = np.asarray(x)
        if np.any(xa > self.limit):
            raise DomainError(f"pi({np.max(xa)}) exceeds table limit {self.limit}")
        out = np.searchsorted(self.primes, np.floor(xa), side="right")
        return int(out) if np.ndim(out) == 0 else out

    def primes_upto(self, x: int) -> np.ndarray:
        return self.primes[: self.pi(x)]

    def checksum(self) -> str:
        """Short digest identifying the table contents (used as a cache key)."""
        import hashlib

        h = hashlib.sha256()
        h.update(str(self.limit).encode())
        h.update(np.ascontiguousarray(self.primes[-64:]).tobytes())
        h.update(str(len(self.primes)).encode())
        return h.hexdigest()[:16]


def _prime_powers(primes: np.ndarray, limit: int):
    qs, ps, ks = [primes.astype(np.int64)], [primes.astype(np.int64)], [np.ones(len(primes), np.int64)]
    base = primes[primes.astype(np.float64) ** 2 <= limit].astype(np.int64)
    cur = base.copy()
    k = 1
    while len(base):
        k += 1
        cur = cur * base
        keep = cur <= limit
        base, cur = base[keep], cur[keep]
        if not len(base):
            break
        qs.append(cur.copy())
        ps.append(base.copy())
        ks.append(np.full(len(base), k, np.int64))
    q = np.concatenate(qs)
    order = np.argsort(q, kind="stable")
    return q[order], np.concatenate(ps)[order], np.concatenate(ks)[order]


def _odd_sieve(limit: int) -> np.ndarray:
    """Primes up to ``limit`` from a byte sieve over odd numbers."""
    if limit < 3:
        return np.array([2], dtype=np.int64) if limit >= 2 else np.array([], dtype=np.int64)
    size = (limit - 1) // 2  # index i represents 2 i + 1, i >= 1
    flags = np.ones(size + 1, dtype=bool)
    flags[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            flags[(p * p - 1) // 2 :: p] = False
    return np.concatenate(([2], 2 * np.flatnonzero(flags) + 1)).astype(np.int64)


def build_tables(limit: int, with_spf: bool = True) -> PrimeTables:
    """Sieve up to ``limit`` (2 <= limit <= 10**8).

    With ``with_spf=False`` only primes and prime powers are produced, which
    needs far less memory; :func:`factor` then refuses to work.
    """
    if not isinstance(limit, (int, np.integer)) or limit < 2 or limit > MAX_TABLE_LIMIT:
        raise ConfigError(f"table limit must be an integer in [2, {MAX_TABLE_LIMIT}], got {limit!r}")
    limit = int(limit)
    if with_spf:
        spf = kernels.smallest_prime_factors(limit)
        idx = np.arange(limit + 1)
        primes = np.flatnonzero((spf == idx) & (idx >= 2)).astype(np.int64)
    else:
        spf = None
        primes = _odd_sieve(limit)
    q, p, k = _prime_powers(primes, limit)
    return PrimeTables(limit=limit, spf=spf, primes=primes, pp_q=q, pp_p=p, pp_k=k)


_TABLE_CACHE: Dict[tuple, PrimeTables] = {}


def get_tables(limit: int, with_spf: bool = True) -> PrimeTables:
    """Memoised :func:`build_tables`; reuses a larger table if one exists."""
    for (lim, has_spf), tab in _TABLE_CACHE.items():
        if lim >= limit and (has_spf or not with_spf):
            return tab
    tab = build_tables(limit, with_spf)
    _TABLE_CACHE[(limit, with_spf)] = tab
    return tab


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer with its prime factorisation ``{p: multiplicity}``."""

    value: int
    multiplicities: Dict[int, int]

    @property
    def big_omega(self) -> int:
        return sum(self.multiplicities.values())

    @property
    def omega(self) -> int:
        return len(self.multiplicities)

    def prime_multiset(self) -> list:
        """Primes with repetition, in increasing order."""
        out = []
        for p in sorted(self.multiplicities):
            out.extend([p] * self.multiplicities[p])
        return out


def factor(m: int, tables: PrimeTables) -> FactoredInteger:
    """Factor ``m`` using the smallest-prime-factor table."""
    m = int(m)
    if m < 1:
        raise DomainError(f"can only factor positive integers, got {m}")
    if m > tables.limit:
        raise DomainError(f"{m} exceeds table limit {tables.limit}; rebuild tables with a larger limit")
    if tables.spf is None:
        raise DomainError("tables were built without the factor table (with_spf=False)")
    mult: Dict[int, int] = {}
    r = m
    spf = tables.spf
    while r > 1:
        p = int(spf[r])
        c = 0
        while r % p == 0:
            r //= p
            c += 1
        mult[p] = c
    return FactoredInteger(m, mult)


def von_mangoldt_array(n: int, tables: PrimeTables) -> np.ndarray:
    """``Lambda(x)`` for ``x = 0..n`` as a dense float array."""
    if n > tables.limit:
        raise DomainError(f"{n} exceeds table limit {tables.limit}")
    lam = np.zeros(n + 1)
    sel = tables.pp_q <= n
    lam[tables.pp_q[sel]] = np.log(tables.pp_p[sel].astype(np.float64))
    return lam


def recompute_mertens_b(prime_limit: int = 10**6, tables: Optional[PrimeTables] = None) -> float:
    """``gamma - sum_{k>=2} sum_p 1/(k p^k)`` over primes up to ``prime_limit``.

    The neglected primes contribute about ``1/(2 X log X)``; that estimate is
    added back so the result is accurate to roughly 1e-10 at ``X = 10**6``.
    """
    if tables is None or tables.limit < prime_limit:
        tables = get_tables(prime_limit)
    p = tables.primes_upto(prime_limit).astype(np.float64)
    # sum_{k>=2} x^k/k = -log(1-x) - x with x = 1/p
    x = 1.0 / p
    s = float(np.sum(-np.log1p(-x) - x))
    tail = 1.0 / (2.0 * prime_limit * math.log(prime_limit))
    return EULER_GAMMA - s - tail


class MertensMap:
    """The step function ``f`` and its generalised inverse ``h``.

    Parameters
    ----------
    tables : PrimeTables
    variant : {"kq", "p"}
        ``"kq"`` sums ``1/(k q)`` over prime powers with offset ``-gamma``;
        ``"p"`` sums ``1/p`` over primes with offset ``-B``.
    crossover : float, optional
        Beyond ``log(crossover)`` the map is replaced by ``log x`` (and ``h``
        by the identity).  Defaults to the table limit.
    """

    def __init__(self, tables: PrimeTables, variant: str = "kq", crossover: Optional[float] = None):
        if variant not in ("kq", "p"):
            raise ConfigError(f"unknown Mertens variant {variant!r}")
        self.tables = tables
        self.variant = variant
        self.crossover = float(tables.limit if crossover is None else min(crossover, tables.limit))
        if variant == "kq":
            q, pp, kk = tables.pp_q, tables.pp_p, tables.pp_k
            jumps = 1.0 / (kk * q.astype(np.float64))
            self.offset = -EULER_GAMMA
        else:
            q = pp = tables.primes
            kk = np.ones(len(q), dtype=np.int64)
            jumps = 1.0 / q.astype(np.float64)
            self.offset = -MERTENS_B
        keep = q <= self.crossover
        self.q = q[keep]
        self.p = pp[keep]
        self.k = kk[keep]
        self.log_q = np.log(self.q.astype(np.float64))
        # breaks[j] = f(log q_j): value after the jump at q_j
        self.breaks = self.offset + np.cumsum(jumps[keep])
        self.log_crossover = math.log(self.crossover)

    def f(self, x):
        """Evaluate the step function at ``x`` (right-continuous)."""
        xa = np.asarray(x, dtype=np.float64)
        j = np.searchsorted(self.log_q, xa, side="right")
        vals = np.where(j > 0, self.breaks[np.maximum(j - 1, 0)], self.offset)
        out = np.where(xa > self.log_crossover, np.log(np.maximum(xa, 1e-300)), vals)
        return float(out) if out.ndim == 0 else out

    def h(self, y):
        """Generalised inverse in multiplicative form: ``h(y) = log q`` or 0.

        ``h(y) = 0`` when ``log y <= offset``; otherwise ``log q`` for the
        first prime power whose breakpoint is at least ``log y``.  Past the
        last breakpoint the identity is returned.
        """
        ya = np.asarray(y, dtype=np.float64)
        if np.any(ya <= 0):
            raise DomainError("h is defined for positive arguments only")
        ly = np.log(ya)
        j = np.searchsorted(self.breaks, ly, side="left")
        inside = j < len(self.breaks)
        vals = np.where(inside, self.log_q[np.minimum(j, len(self.log_q) - 1)], ya)
        out = np.where(ly <= self.offset, 0.0, vals)
        return float(out) if out.ndim == 0 else out

    def h_prime_power(self, y):
        """Prime power behind ``h(y)`` as arrays ``(q, p, k)``.

        ``q = 1`` (``p = 1``, ``k = 0``) where ``h(y) = 0``; ``q = 0`` marks
        arguments past the table, where ``h`` is the identity.
        """
        ya = np.atleast_1d(np.asarray(y, dtype=np.float64))
        j = np.searchsorted(self.breaks, np.log(ya), side="left")
        zero = np.log(ya) <= self.offset
        past = (j >= len(self.breaks)) & ~zero
        jj = np.minimum(j, len(self.q) - 1)
        q = np.where(zero, 1, np.where(past, 0, self.q[jj]))
        p = np.where(zero, 1, np.where(past, 0, self.p[jj]))
        k = np.where(zero | past, 0, self.k[jj])
        return q, p, k

    def ratio_max(self) -> float:
        """``sup y / h(y)`` over ``y`` with ``h(y) > 0`` (attained at bin tops)."""
        tops = np.exp(self.breaks)
        return float(max(np.max(tops / self.log_q), 1.0))

    def b0_integral(self, x_max: Optional[float] = None):
        """Area between the graph of ``f`` and ``log`` on ``(0, x_max)``.

        Integrated exactly piece by piece.  Returns ``(value, tail_bound)``,
        where ``tail_bound`` estimates the neglected area beyond ``x_max``
        from the average integrand over the last decade of the table.
        """
        if x_max is None:
            x_max = self.log_crossover
        lo = np.concatenate(([0.0], self.log_q))
        hi = np.concatenate((self.log_q, [x_max]))
        c = np.concatenate(([self.offset], self.breaks))
        keep = hi > lo
        lo, hi, c = lo[keep], hi[keep], c[keep]
        hi = np.minimum(hi, x_max)
        pieces = _abs_log_minus_const(lo, hi, c)
        total = float(np.sum(pieces))
        # tail estimate: the integrand behaves like a mean-zero oscillation of
        # size ~ sqrt(x) e^{-x/2} scale; use the mean over the top decade
        tail_lo = x_max - math.log(10.0)
        sel = lo >= tail_lo
        width = float(np.sum(hi[sel] - lo[sel]))
        mean_abs = float(np.sum(pieces[sel]) / width) if width > 0 else 0.0
        # the average decays at least like e^{-x/2} x^2; integrate that profile
        tail = mean_abs * 2.0
        return total, tail


def _int_log_minus_c(a, b, c):
    """Stable ``int_a^b (log x - c) dx`` for ``0 <= a < b``."""
    h = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_a = np.where(a > 0, a, 1.0)
        # (Phi(b) - Phi(a)) / h with Phi(x) = x log x - x
        mean_log = np.log(b) + np.where(a > 0, safe_a * np.log1p(h / safe_a) / h, 0.0) - 1.0
    return h * (mean_log - c)


def _abs_log_minus_const(a, b, c):
    r = np.exp(c)
    full = _int_log_minus_c(a, b, c)
    below = r <= a  # log x >= c throughout
    above = r >= b
    split = ~(below | above)
    out = np.where(below, full, -full)
    if np.any(split):
        rs = r[split]
        left = -_int_log_minus_c(a[split], rs, c[split])
        right = _int_log_minus_c(rs, b[split], c[split])
        out = out.copy()
        out[split] = left + right
    return out


def mertens_f(x, mertens: MertensMap):
    return mertens.f(x)


def h_map(y, mertens: MertensMap):
    return mertens.h(y)


def chebyshev_R(x: float, tables: PrimeTables) -> float:
    """``sum_{q <= x} log(q)/(k q) - log x`` over prime powers ``q = p^k``."""
    if x < 1:
        raise DomainError("chebyshev_R needs x >= 1")
    if x > tables.limit:
        raise DomainError(f"{x} exceeds table limit {tables.limit}")
    sel = tables.pp_q <= x
    q = tables.pp_q[sel].astype(np.float64)
    return float(np.sum(np.log(tables.pp_p[sel]) / q) - math.log(x))


def harmonic_number(n: int) -> float:
    if n < 1:
        return 0.0
    if n < 10**6:
        return float(np.sum(1.0 / np.arange(1, n + 1)))
    from scipy.special import digamma

    return float(digamma(n + 1) + EULER_GAMMA)


def iter_partitions(z: int) -> Iterable[tuple]:
    """Partitions of ``z`` as non-increasing tuples."""
    def rec(rem, cap):
        if rem == 0:
            yield ()
            return
        for first in range(min(rem, cap), 0, -1):
            for rest in rec(rem - first, first):
                yield (first,) + rest

    return rec(z, z)
