"""Distances between the uniform-integer model and the independent model.

Exact total variation for the exponents of the small primes, the crude
bound ``u(b, n)``, empirical insertion/deletion costs achieved by concrete
couplings, and an exact optimal-transport oracle for tiny instances.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .number_theory import ConfigError, DomainError, PrimeTables, get_tables
from .samplers import as_generator

MAX_SMALL_PRIMES = 10
MAX_OT_N = 64
MAX_OT_DENOMINATOR = 10**6


def _small_primes(b: int, tables: Optional[PrimeTables]) -> List[int]:
    if b > 30:
        raise ConfigError("b must be at most 30")
    tables = tables or get_tables(1000, with_spf=False)
    ps = [int(p) for p in tables.primes_upto(max(b, 1))]
    if len(ps) > MAX_SMALL_PRIMES:
        raise ConfigError(f"at most {MAX_SMALL_PRIMES} primes are supported")
    return ps


def smooth_numbers(primes: Sequence[int], bound: int) -> List[Tuple[int, Tuple[int, ...]]]:
    """All ``(d, exponents)`` with ``d <= bound`` built from ``primes``, sorted by ``d``."""
    out = [(1, ())]
    for p in primes:
        nxt = []
        for d, ex in out:
            a = 0
            while d <= bound:
                nxt.append((d, ex + (a,)))
                d *= p
                a += 1
        out = nxt
    out.sort()
    return out


@dataclass
class SmoothVectorLaw:
    """Joint laws of the exponents of the primes ``<= b``.

    ``dependent[a]`` is the chance that a uniform integer in ``1..n`` has
    exponent vector ``a``; ``independent[a]`` the same for independent
    geometric exponents.  Only vectors with ``prod p^a <= n`` are listed; the
    independent law puts mass ``tail_mass_Z`` on the rest.
    """

    b: int
    n: int
    primes: Tuple[int, ...]
    dependent: Dict[Tuple[int, ...], Fraction] = field(repr=False)
    independent: Dict[Tuple[int, ...], Fraction] = field(repr=False)
    tail_mass_Z: Fraction = Fraction(0)

    def l1(self) -> Fraction:
        s = sum((abs(self.dependent[a] - self.independent[a]) for a in self.dependent), Fraction(0))
        return s + self.tail_mass_Z


def _coprime_count(n: int, d: int, primes: Sequence[int]) -> int:
    """``#{m <= n : m = d r, r coprime to every p in primes}`` by inclusion-exclusion."""
    total = 0
    for r in range(len(primes) + 1):
        for sub in combinations(primes, r):
            q = d * math.prod(sub)
            if q <= n:
                total += (-1) ** r * (n // q)
    return total


def smooth_vector_law(b: int, n: int, tables: Optional[PrimeTables] = None) -> SmoothVectorLaw:
    if n < 1:
        raise DomainError("n must be positive")
    if n > 10**6:
        raise ConfigError("n must be at most 10**6")
    ps = _small_primes(b, tables)
    c = Fraction(math.prod(p - 1 for p in ps), math.prod(ps))
    dep, ind = {}, {}
    for d, ex in smooth_numbers(ps, n):
        dep[ex] = Fraction(_coprime_count(n, d, ps), n)
        ind[ex] = c / d
    tail = 1 - sum(ind.values(), Fraction(0))
    return SmoothVectorLaw(b, n, tuple(ps), dep, ind, tail)


def exact_dtv_small_primes(b: int, n: int, tables: Optional[PrimeTables] = None,
                           exact: bool = False):
    """Unhalved total variation between the exponent vectors of primes ``<= b``.

    Returns a ``Fraction`` when ``exact`` is true, otherwise a float.
    """
    v = smooth_vector_law(b, n, tables).l1()
    return v if exact else float(v)


@dataclass(frozen=True)
class CrudeBound:
    """``u(b, n)`` split into the part from ``d <= n`` and the exact tail."""

    b: int
    n: int
    head: Fraction
    tail: Fraction

    @property
    def value(self) -> Fraction:
        return self.head + self.tail


def crude_u(b: int, n: int, tables: Optional[PrimeTables] = None, exact: bool = False):
    """``u(b, n) = (1/n) sum_{d b-smooth} {n/d} 2^omega(d)``.

    Terms with ``d > n`` have ``{n/d} = n/d``, and the full sum of
    ``2^omega(d)/d`` over ``b``-smooth ``d`` is ``prod (p+1)/(p-1)``, so the
    infinite tail is an exact rational and nothing is truncated.
    """
    v = crude_u_parts(b, n, tables).value
    return v if exact else float(v)


def crude_u_parts(b: int, n: int, tables: Optional[PrimeTables] = None) -> CrudeBound:
    if n < 1:
        raise DomainError("n must be positive")
    ps = _small_primes(b, tables)
    head = Fraction(0)
    small = Fraction(0)
    for d, ex in smooth_numbers(ps, n):
        w = 2 ** sum(1 for a in ex if a > 0)
        head += Fraction((n % d) * w, d)
        small += Fraction(w, d)
    full = Fraction(math.prod(p + 1 for p in ps), math.prod(p - 1 for p in ps))
    return CrudeBound(b, n, head / n, full - small)


def differencing_gap(b: int, n: int, tables: Optional[PrimeTables] = None) -> Fraction:
    """``max_a |P(C = a) - P(Z = a)|`` over enumerated exponent vectors."""
    law = smooth_vector_law(b, n, tables)
    return max(abs(law.dependent[a] - law.independent[a]) for a in law.dependent)


# ---------------------------------------------------------------- empirical couplings

@dataclass
class Moments:
    """Mergeable running (count, sum, sum of squares)."""

    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, values) -> "Moments":
        v = np.asarray(values, dtype=float)
        self.count += v.size
        self.total += float(v.sum())
        self.total_sq += float((v * v).sum())
        return self

    def merge(self, other: "Moments") -> "Moments":
        return Moments(self.count + other.count, self.total + other.total,
                       self.total_sq + other.total_sq)

    @property
    def mean(self) -> float:
        return self.total / self.count

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        var = (self.total_sq - self.total ** 2 / self.count) / (self.count - 1)
        return math.sqrt(max(var, 0.0) / self.count)


def empirical_indel(coupling: str, n: int, trials: int, rng, tables: Optional[PrimeTables] = None,
                    horizon_factor: float = 1000.0, mode: str = "exact_uniform",
                    backend=None) -> Tuple[float, float]:
    """Mean and standard error of the indel cost achieved by one coupling.

    ``coupling`` is ``"feller"`` (cycle counts), ``"grow"`` (the integer
    growing coupling) or ``"identity"`` (both sides share one uniform integer,
    so the cost is zero).  This is an upper bound on ``d_W``, not ``d_W``.
    """
    from .couplings import feller_batch, growth_model, indel_count

    if trials < 1:
        raise DomainError("trials must be positive")
    gen = as_generator(rng)
    if coupling == "feller":
        vals = feller_batch(n, trials, horizon_factor, gen, backend=backend).indel
    elif coupling == "grow":
        tables = tables or get_tables(max(n, 1000))
        vals = growth_model(n, tables, mode=mode).batch(trials, gen, backend=backend).indel
    elif coupling == "identity":
        tables = tables or get_tables(max(n, 1000))
        m = gen.integers(1, n + 1, size=trials)
        vals = np.array([indel_count(int(x), int(x), tables) for x in m])
    else:
        raise ConfigError(f"unknown coupling {coupling!r}")
    mom = Moments().add(vals)
    return mom.mean, mom.stderr


def expected_omega_uniform(n: int, tables: Optional[PrimeTables] = None) -> float:
    """``E Omega(N)`` for ``N`` uniform on ``1..n``: ``(1/n) sum_{p^k <= n} floor(n / p^k)``."""
    tables = tables or get_tables(max(n, 1000), with_spf=False)
    q = tables.pp_q[tables.pp_q <= n]
    return float(np.sum(n // q)) / n


def expected_omega_independent(n: int, tables: Optional[PrimeTables] = None) -> float:
    """``E Omega(M) = sum_{p <= n} 1/(p - 1)``."""
    tables = tables or get_tables(max(n, 1000), with_spf=False)
    p = tables.primes_upto(n).astype(float)
    return float(math.fsum((1.0 / (p - 1)).tolist()))


def intensity_gap(n: int, tables: Optional[PrimeTables] = None) -> float:
    """``E Omega(N) - E Omega(M)``."""
    return expected_omega_uniform(n, tables) - expected_omega_independent(n, tables)


# ---------------------------------------------------------------- optimal transport

def _to_fractions(law) -> List[Fraction]:
    out = []
    for x in law:
        if isinstance(x, Fraction):
            out.append(x)
            continue
        f = Fraction(float(x)).limit_denominator(MAX_OT_DENOMINATOR)
        if abs(float(f) - float(x)) > 1e-12:
            raise ConfigError("masses are not rationals with denominator <= 10**6")
        out.append(f)
    if sum(out) != 1:
        raise DomainError("masses must sum to one")
    if any(x < 0 for x in out):
        raise DomainError("masses must be non-negative")
    return out


def _min_cost_flow(supply: List[int], demand: List[int], cost: np.ndarray) -> int:
    """Successive shortest paths on the bipartite transport network; returns total cost."""
    ns, nd = len(supply), len(demand)
    src, snk = ns + nd, ns + nd + 1
    nv = ns + nd + 2
    graph: List[List[int]] = [[] for _ in range(nv)]
    to, cap, cst = [], [], []

    def edge(u, v, c, w):
        graph[u].append(len(to)); to.append(v); cap.append(c); cst.append(w)
        graph[v].append(len(to)); to.append(u); cap.append(0); cst.append(-w)

    for i, s in enumerate(supply):
        if s:
            edge(src, i, s, 0)
    for j, d in enumerate(demand):
        if d:
            edge(ns + j, snk, d, 0)
    big = sum(supply)
    for i in range(ns):
        if supply[i]:
            for j in range(nd):
                if demand[j]:
                    edge(i, ns + j, big, int(cost[i, j]))

    potential = [0] * nv
    flow = total = 0
    while flow < big:
        dist = [math.inf] * nv
        prev = [-1] * nv
        dist[src] = 0
        heap = [(0, src)]
        while heap:
            du, u = heapq.heappop(heap)
            if du > dist[u]:
                continue
            for e in graph[u]:
                if cap[e] > 0:
                    v = to[e]
                    nd_ = du + cst[e] + potential[u] - potential[v]
                    if nd_ < dist[v]:
                        dist[v] = nd_
                        prev[v] = e
                        heapq.heappush(heap, (nd_, v))
        if dist[snk] == math.inf:
            raise ConfigError("transport problem is infeasible")
        for v in range(nv):
            if dist[v] < math.inf:
                potential[v] += dist[v]
        push = big - flow
        v = snk
        while v != src:
            e = prev[v]
            push = min(push, cap[e])
            v = to[e ^ 1]
        v = snk
        while v != src:
            e = prev[v]
            cap[e] -= push
            cap[e ^ 1] += push
            total += push * cst[e]
            v = to[e ^ 1]
        flow += push
    return total


def indel_cost_matrix(n: int, tables: Optional[PrimeTables] = None) -> np.ndarray:
    """``cost[i-1, j-1] = d(i, j)`` for ``1 <= i, j <= n``."""
    from .couplings import indel_count
    from .number_theory import factor

    tables = tables or get_tables(max(n, 1000))
    fs = [factor(i, tables) for i in range(1, n + 1)]
    c = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            c[i, j] = c[j, i] = indel_count(fs[i], fs[j])
    return c


def ot_oracle_small(law_a, law_b, tables: Optional[PrimeTables] = None, exact: bool = False):
    """Minimum of ``E d(X, Y)`` over all couplings of two laws on ``1..n``.

    ``law_a`` and ``law_b`` are sequences of masses for ``1..n`` (or Pmf
    objects); masses are scaled to a common denominator and the transport
    problem is solved exactly as an integer min-cost flow.
    """
    a = list(law_a.mass[1:]) if hasattr(law_a, "mass") else list(law_a)
    b = list(law_b.mass[1:]) if hasattr(law_b, "mass") else list(law_b)
    if len(a) != len(b):
        raise DomainError("laws must live on the same range 1..n")
    n = len(a)
    if n > MAX_OT_N:
        raise ConfigError(f"n must be at most {MAX_OT_N}")
    fa, fb = _to_fractions(a), _to_fractions(b)
    den = math.lcm(*(x.denominator for x in fa + fb))
    if den > MAX_OT_DENOMINATOR:
        raise ConfigError("common denominator exceeds 10**6; instance too fine")
    supply = [int(x * den) for x in fa]
    demand = [int(x * den) for x in fb]
    cost = indel_cost_matrix(n, tables)
    val = Fraction(_min_cost_flow(supply, demand, cost), den)
    return val if exact else float(val)


def product_coupling_cost(law_a, law_b, tables: Optional[PrimeTables] = None) -> float:
    """``E d(X, Y)`` when ``X`` and ``Y`` are independent."""
    a = np.asarray(law_a.mass[1:] if hasattr(law_a, "mass") else law_a, dtype=float)
    b = np.asarray(law_b.mass[1:] if hasattr(law_b, "mass") else law_b, dtype=float)
    return float(a @ indel_cost_matrix(len(a), tables) @ b)
