"""The three couplings.

* Feller: cycle counts of a uniform random permutation of ``n`` against the
  independent Poisson counts, read off one sequence of Bernoulli(1/i) bits.
* Growing an integer: independent geometric prime multiplicities, split into
  prime powers, taken in size-biased order to build ``J(n)``; a uniform
  ``P0(n)``; and an exact repair step that makes ``N(n)`` uniform.
* Poisson-Dirichlet: the labelled process with intensity ``exp(-w y)`` gives
  the scale-invariant points, their spacings are rounded to logs of prime
  powers, and the result is compared with the scaled PD vector.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import special

from . import kernels
from ._kernels_py import grow_trial, invert_tail
from .exact_densities import (
    Pmf,
    TailTable,
    Uniformizer,
    build_tail_table,
    pmf_JP0,
)
from .number_theory import (
    ConfigError,
    DomainError,
    FactoredInteger,
    MertensMap,
    PrimeTables,
    factor,
)
from .samplers import WeightedItem, as_generator


class TruncationWarning(UserWarning):
    """The Feller horizon is too short for the stated truncation bound."""


# ---------------------------------------------------------------- Feller

@dataclass
class FellerSample:
    """One run of the Feller coupling.

    ``ones`` lists the positions ``j <= horizon`` with ``xi_j = 1``.  Counts
    are dictionaries ``{i: C_i}`` restricted to ``i <= n``.
    """

    n: int
    horizon: int
    ones: np.ndarray
    cycle_counts_n: Dict[int, int]
    cycle_counts_inf: Dict[int, int]
    first_cycle_len: int
    J_perm: int
    spacings_n: List[int] = field(default_factory=list)
    spacings_inf: List[int] = field(default_factory=list)

    @property
    def xi(self) -> np.ndarray:
        bits = np.zeros(self.horizon, dtype=np.int8)
        bits[self.ones - 1] = 1
        return bits

    @property
    def indel(self) -> int:
        keys = set(self.cycle_counts_n) | set(self.cycle_counts_inf)
        return sum(abs(self.cycle_counts_n.get(i, 0) - self.cycle_counts_inf.get(i, 0)) for i in keys)

    def one_sided(self):
        """``(sum (C(n) - C(inf))^+, sum (C(inf) - C(n))^+)``."""
        keys = set(self.cycle_counts_n) | set(self.cycle_counts_inf)
        d = [self.cycle_counts_n.get(i, 0) - self.cycle_counts_inf.get(i, 0) for i in keys]
        return sum(x for x in d if x > 0), -sum(x for x in d if x < 0)


def _count(values, n):
    out: Dict[int, int] = {}
    for v in values:
        if v <= n:
            out[int(v)] = out.get(int(v), 0) + 1
    return out


def feller_from_ones(ones: Sequence[int], n: int, horizon: int) -> FellerSample:
    """Build the sample from the positions of the ones (``ones[0] == 1``)."""
    ones = np.asarray(ones, dtype=np.int64)
    if len(ones) == 0 or ones[0] != 1:
        raise DomainError("the first bit is always one")
    if horizon < n:
        raise DomainError("horizon must be at least n")
    within = ones[ones <= n]
    sp_n = list(np.diff(np.append(within, n + 1)))
    sp_inf = list(np.diff(ones[ones <= horizon]))
    a = int(n + 1 - within[-1])
    return FellerSample(
        n=n,
        horizon=horizon,
        ones=ones,
        cycle_counts_n=_count(sp_n, n),
        cycle_counts_inf=_count(sp_inf, n),
        first_cycle_len=a,
        J_perm=n - a,
        spacings_n=[int(x) for x in sp_n],
        spacings_inf=[int(x) for x in sp_inf],
    )


def feller_from_bits(bits, n: Optional[int] = None) -> FellerSample:
    """Sample from an explicit bit string such as ``"10111000011000100000"``.

    The horizon is the length of the string; ``n`` defaults to it.
    """
    arr = np.array([int(c) for c in bits] if isinstance(bits, str) else bits, dtype=np.int64)
    if n is None:
        n = len(arr)
    return feller_from_ones(np.flatnonzero(arr) + 1, n, len(arr))


def _horizon(n: int, horizon_factor: float) -> int:
    if n < 1:
        raise DomainError("n must be positive")
    if horizon_factor < 100:
        warnings.warn(f"horizon factor {horizon_factor} < 100: truncation bound n/T is loose",
                      TruncationWarning, stacklevel=3)
    return int(math.ceil(horizon_factor * n))


def feller_sample(n: int, horizon_factor: float, rng) -> FellerSample:
    """Skip-sample the ones of ``xi`` up to ``T = ceil(horizon_factor n)``.

    After a one at ``j`` the next one sits at ``floor(j/U) + 1``, which has
    ``P(next > k) = j/k`` as for independent Bernoulli(1/i) bits.  Draws are
    consumed exactly as in :func:`feller_batch`.
    """
    T = _horizon(n, horizon_factor)
    gen = as_generator(rng)
    ones = [1]
    prev = 1
    while True:
        x = prev / (1.0 - gen.random())
        if x >= T:
            break
        prev = int(x) + 1
        ones.append(prev)
    return feller_from_ones(ones, n, T)


@dataclass
class FellerBatch:
    n: int
    horizon: int
    indel: np.ndarray
    extra: np.ndarray
    missing: np.ndarray
    first_cycle_len: np.ndarray
    monotone_ok: np.ndarray

    @property
    def truncation_bound(self) -> float:
        return self.n / self.horizon


def feller_batch(n: int, trials: int, horizon_factor: float, rng, backend=None) -> FellerBatch:
    """Run ``trials`` Feller couplings through the compiled (or fallback) kernel."""
    T = _horizon(n, horizon_factor)
    gen = as_generator(rng)
    out = kernels.feller_batch(gen, int(trials), int(n), int(T), backend=backend)
    return FellerBatch(n, T, out[0], out[1], out[2], out[3], out[4].astype(bool))


# ---------------------------------------------------------------- growing an integer

def indel_count(a, b, tables: Optional[PrimeTables] = None) -> int:
    """``sum_p |v_p(a) - v_p(b)|``; accepts ints (with ``tables``) or FactoredIntegers."""
    fa = a if isinstance(a, FactoredInteger) else factor(a, tables)
    fb = b if isinstance(b, FactoredInteger) else factor(b, tables)
    ma, mb = fa.multiplicities, fb.multiplicities
    return sum(abs(ma.get(p, 0) - mb.get(p, 0)) for p in set(ma) | set(mb))


@dataclass
class GrownInteger:
    """One trial of the integer-growing coupling."""

    n: int
    prime_power_items: List[WeightedItem]
    big_label_tail: float
    Z: Dict[int, int]
    J: int
    P0: int
    N: int
    coupled_event: bool
    indel_count: int
    extra: int
    missing: int


@dataclass
class GrowBatch:
    n: int
    J: np.ndarray
    P0: np.ndarray
    N: np.ndarray
    coupled: np.ndarray
    indel: np.ndarray
    extra: np.ndarray
    missing: np.ndarray

    def transcript(self, seed: int) -> List[str]:
        """One line per trial: ``n seed J P0 N E_n indel``."""
        return [f"{self.n} {seed} {j} {p} {m} {int(c)} {d}"
                for j, p, m, c, d in zip(self.J, self.P0, self.N, self.coupled, self.indel)]


class GrowthModel:
    """Per-``n`` data for the integer-growing coupling, built once and reused.

    Parameters
    ----------
    n : int
    tables : PrimeTables
        Must reach at least ``n`` and carry the factor table.
    mode : {"simulate", "exact_uniform"}
        In ``"simulate"`` mode ``N = J P0``; in ``"exact_uniform"`` mode the
        repair step makes ``N`` exactly uniform and needs ``f_n``.
    variant : {"kq", "p"}
        ``"kq"`` splits each geometric count into prime powers (weight
        ``log q``); ``"p"`` keeps copies of ``p`` with weight ``log p``.
    fn : Pmf, optional
        Law of ``J P0``; computed (and cached) when omitted in exact mode.
    """

    def __init__(self, n: int, tables: PrimeTables, mode: str = "simulate", variant: str = "kq",
                 fn: Optional[Pmf] = None, tail_points: int = 1500):
        if n < 1:
            raise DomainError("n must be positive")
        if n > tables.limit or tables.spf is None:
            raise DomainError(f"n={n} needs tables with factor data up to n (limit {tables.limit})")
        if mode not in ("simulate", "exact_uniform"):
            raise ConfigError(f"unknown mode {mode!r}")
        if variant not in ("kq", "p"):
            raise ConfigError(f"unknown variant {variant!r}")
        self.n = n
        self.tables = tables
        self.mode = mode
        self.variant = variant
        self.primes = np.ascontiguousarray(tables.primes_upto(n), dtype=np.int64)
        self.log_primes = np.log(self.primes.astype(np.float64))
        self.inv_p = 1.0 / self.primes.astype(np.float64)
        self.spf = np.ascontiguousarray(tables.spf[: n + 1], dtype=np.int32)
        self.tail: TailTable = build_tail_table(n, tables, variant, tail_points)
        self.uniformizer: Optional[Uniformizer] = None
        if mode == "exact_uniform":
            if variant != "kq":
                raise ConfigError("exact_uniform mode is defined for the prime-power variant only")
            if fn is None:
                fn = pmf_JP0(n, tables)
            if fn.n != n:
                raise ConfigError("f_n does not match n")
            self.uniformizer = Uniformizer.from_pmf(fn)
            self.bvec = np.ascontiguousarray(self.uniformizer.b)
            self.gcum = np.ascontiguousarray(self.uniformizer.gcum)
        else:
            self.bvec = np.zeros(0)
            self.gcum = np.zeros(0)

    def sample(self, rng) -> GrownInteger:
        """One trial with the full record (pure Python, same draws as the batch kernel)."""
        gen = as_generator(rng)
        rec: dict = {}
        j, p0, nval, coupled, indel, extra, missing = grow_trial(
            gen, self.n, self.primes, self.log_primes, self.inv_p, self.variant == "kq",
            self.tail.xs, self.tail.ys, self.tail.ds, self.spf, self.bvec, self.gcum, rec)
        items = [WeightedItem(int(q), float(w), float(lab))
                 for q, w, lab, _ in sorted(rec["items"], key=lambda it: -it[2])]
        return GrownInteger(self.n, items, rec["M"], rec["Z"], j, p0, nval, bool(coupled),
                            indel, extra, missing)

    def batch(self, trials: int, rng, backend=None) -> GrowBatch:
        gen = as_generator(rng)
        out = kernels.grow_batch(gen, int(trials), self.n, self.primes, self.log_primes,
                                 self.variant == "kq", self.tail.xs, self.tail.ys, self.tail.ds,
                                 self.spf, self.bvec, self.gcum, backend=backend)
        return GrowBatch(self.n, out[0], out[1], out[2], out[3].astype(bool), out[4], out[5], out[6])


_MODEL_CACHE: Dict[tuple, GrowthModel] = {}


def growth_model(n: int, tables: PrimeTables, mode: str = "simulate", variant: str = "kq",
                 fn: Optional[Pmf] = None) -> GrowthModel:
    key = (n, tables.limit, mode, variant, None if fn is None else fn.checksum)
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = GrowthModel(n, tables, mode, variant, fn)
    return _MODEL_CACHE[key]


def grow_integer(n: int, tables: PrimeTables, rng, mode: str = "simulate",
                 fn: Optional[Pmf] = None, variant: str = "kq") -> GrownInteger:
    """Grow one random integer; see :class:`GrowthModel` for the parameters."""
    if mode == "exact_uniform" and fn is None:
        raise ConfigError("exact_uniform mode needs the law f_n of J P0 (pass fn=pmf_JP0(n, tables))")
    return growth_model(n, tables, mode, variant, fn).sample(rng)


def replay_J(ordered_factors: Sequence[int], n: int) -> int:
    """Largest partial product of ``ordered_factors`` (in the given order) not exceeding ``n``.

    The list must be long enough that the walk stops inside it.
    """
    j = 1
    for q in ordered_factors:
        if j * q > n:
            return j
        j *= q
    raise DomainError("factor list exhausted before the product exceeded n")


def p0_choices(n: int, J: int, tables: PrimeTables) -> List[int]:
    """The ``1 + pi(n/J)`` admissible values ``1, 2, 3, 5, ...`` for ``P0``."""
    return [1] + [int(p) for p in tables.primes_upto(n // J)]


def p0_from_uniform(n: int, J: int, u: float, tables: PrimeTables) -> int:
    """``P0`` from ``u`` in ``(0, 1]``: the ``ceil(K u)``-th admissible value."""
    ch = p0_choices(n, J, tables)
    idx = min(max(int(math.ceil(len(ch) * u)) - 1, 0), len(ch) - 1)
    return ch[idx]


# ---------------------------------------------------------------- Poisson-Dirichlet

@dataclass
class PDCoupledSample:
    """One trial of the Poisson-Dirichlet coupling.

    ``spacings`` are ``Y_1, Y_2, ...`` (the points summing to ``X_1``) above
    the cutoff; ``V`` holds the ranked components of
    ``(log n - X_1, Y_1, Y_2, ...)/log n``.  ``l1_distance`` compares the
    ranked log prime factors of ``J* P0*`` with ``(log n) V``.  When a
    uniformizer is supplied, ``N`` is built from the size-biased ``J`` of the
    same points and ``l1_full`` compares its log prime factors with
    ``(log n) V``.
    """

    n: int
    spacings: np.ndarray
    Q_star: np.ndarray
    J_star: int
    P0_star: int
    V: np.ndarray
    l1_distance: float
    D: float
    cutoff: float
    J: Optional[int] = None
    P0: Optional[int] = None
    N: Optional[int] = None
    coupled_event: Optional[bool] = None
    l1_full: Optional[float] = None


def _sample_e1_density(z_lo: float, z_hi: float, k: int, gen) -> np.ndarray:
    """``k`` draws from density proportional to ``e^{-z}/z`` on ``(z_lo, z_hi]``."""
    m1 = special.exp1(z_lo) - special.exp1(min(z_hi, 1.0)) if z_lo < 1.0 else 0.0
    m2 = special.exp1(max(z_lo, 1.0)) - (special.exp1(z_hi) if np.isfinite(z_hi) else 0.0) \
        if z_hi > 1.0 else 0.0
    out = np.empty(k)
    n1 = gen.binomial(k, m1 / (m1 + m2)) if k else 0
    # region z < 1: log-uniform proposal, accept with e^{-(z - lo)}
    lo, hi = z_lo, min(z_hi, 1.0)
    got = 0
    while got < n1:
        z = lo * np.exp(math.log(hi / lo) * gen.random(n1 - got))
        acc = z[gen.random(len(z)) < np.exp(-(z - lo))]
        out[got : got + len(acc)] = acc
        got += len(acc)
    # region z >= 1: truncated exponential proposal, accept with lo/z
    lo2, hi2 = max(z_lo, 1.0), z_hi
    span = -math.expm1(-(hi2 - lo2)) if np.isfinite(hi2) else 1.0
    while got < k:
        z = lo2 - np.log1p(-span * gen.random(k - got))
        acc = z[gen.random(len(z)) < lo2 / z]
        out[got : got + len(acc)] = acc
        got += len(acc)
    return out


def _strip_points(w_lo: float, w_hi: float, cutoff: float, gen):
    """Points with ``W`` in ``(w_lo, w_hi]`` and ``Y > cutoff``."""
    mean = special.exp1(w_lo * cutoff) - (special.exp1(w_hi * cutoff) if np.isfinite(w_hi) else 0.0)
    k = gen.poisson(mean)
    w = _sample_e1_density(w_lo * cutoff, w_hi * cutoff, k, gen) / cutoff
    y = cutoff + gen.standard_exponential(k) / w
    return w, y


def _ranked_l1(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=np.float64))[::-1]
    b = np.sort(np.asarray(b, dtype=np.float64))[::-1]
    m = max(len(a), len(b))
    a = np.pad(a, (0, m - len(a)))
    b = np.pad(b, (0, m - len(b)))
    return float(np.sum(np.abs(a - b)))


def pd_couple(n: int, mertens: MertensMap, rng, cutoff: Optional[float] = None,
              uniformizer: Optional[Uniformizer] = None,
              tables: Optional[PrimeTables] = None) -> PDCoupledSample:
    """Couple a random integer with the Poisson-Dirichlet vector scaled by ``log n``.

    Points ``(W, Y)`` of the process with intensity ``exp(-w y)`` are generated
    in strips of decreasing ``W`` until (a) the partial sums of ``Y`` in
    decreasing-``W`` order pass ``log n`` and (b) the size-biased ``J`` with
    labels ``W Y / h(Y)`` is determined.  Points with ``Y <= cutoff`` (default
    ``1e-9 log n``) are never generated; they have ``h(Y) = 0`` and carry
    expected mass ``cutoff``.
    """
    if n < 3:
        raise DomainError("pd_couple needs n >= 3")
    tables = tables or mertens.tables
    logn = math.log(n)
    if cutoff is None:
        cutoff = 1e-9 * logn
    if not 0 < cutoff < math.exp(-0.5772156649015329):
        raise DomainError("cutoff must lie in (0, e^-gamma)")
    gen = as_generator(rng)
    rho = mertens.ratio_max()
    ws: List[np.ndarray] = []
    ys: List[np.ndarray] = []
    w_hi = math.inf
    w_lo = 1.0 / logn
    while True:
        w, y = _strip_points(w_lo, w_hi, cutoff, gen)
        ws.append(w)
        ys.append(y)
        W = np.concatenate(ws)
        Y = np.concatenate(ys)
        order = np.argsort(-W)
        W, Y = W[order], Y[order]
        csum = np.cumsum(Y)
        crossed = bool(len(csum)) and csum[-1] >= logn
        resolved = True
        if uniformizer is not None:
            # second coupling: labels W Y / h(Y) over the items with h(Y) > 0
            hY = mertens.h(Y)
            qY, _, _ = mertens.h_prime_power(Y)
            isq = hY > 0
            what = np.where(isq, W * Y / np.where(isq, hY, 1.0), -1.0)
            resolved = False
            jv = 1
            for idx in np.argsort(-what):
                if not isq[idx] or what[idx] <= w_lo * rho:
                    break
                qi = int(qY[idx]) if qY[idx] > 0 else n + 1
                if qi > n // jv:
                    resolved = True
                    break
                jv *= qi
            j_second = jv
        if crossed and resolved:
            break
        w_hi = w_lo
        w_lo = w_lo / 4.0
    k0 = int(np.searchsorted(csum, logn, side="left"))  # first index with csum >= log n
    Yi = Y[:k0]  # Y_1, Y_2, ... in decreasing-W order
    X1 = float(csum[k0 - 1]) if k0 > 0 else 0.0
    hYi = mertens.h(Yi) if len(Yi) else np.zeros(0)
    qi, pi_, ki = mertens.h_prime_power(Yi) if len(Yi) else (np.zeros(0, int),) * 3
    D = float(np.sum(np.abs(hYi - Yi)))
    scaled = np.concatenate(([logn - X1], Yi))
    V = np.sort(scaled)[::-1] / logn
    # J* with prime powers split into repeated primes
    u = 1.0 - gen.random()
    logs_star = []
    js = 1
    for q, p, k, hv in zip(qi, pi_, ki, hYi):
        if q == 1:
            continue
        if q == 0:  # past the table: not a tabulated prime power
            logs_star.append(float(hv))
            js = n + 1
            continue
        logs_star.extend([math.log(int(p))] * int(k))
        js = js * int(q) if js <= n else js
    Q = np.where(qi == 0, -1, qi).astype(np.int64)
    if js > n:
        js_out, p0s = int(js), 1
    else:
        js_out = int(js)
        p0s = p0_from_uniform(n, js, u, tables)
    js = js_out
    if p0s > 1:
        logs_star.append(math.log(p0s))
    l1 = _ranked_l1(logs_star, scaled)
    out = PDCoupledSample(n, Yi, Q, js, p0s, V, l1, D, cutoff)
    if uniformizer is not None:
        p0 = p0_from_uniform(n, j_second, u, tables)
        m = j_second * p0
        u1 = 1.0 - gen.random()
        if u1 <= uniformizer.b[m]:
            nval, coupled = m, True
        else:
            u2 = 1.0 - gen.random()
            nval = int(np.searchsorted(uniformizer.gcum, u2, side="left"))
            nval = min(max(nval, 1), n)
            coupled = False
        fN = factor(nval, tables)
        logs_n = [math.log(p) for p in fN.prime_multiset()]
        out.J, out.P0, out.N, out.coupled_event = j_second, p0, nval, coupled
        out.l1_full = _ranked_l1(logs_n, scaled)
    return out
