"""Exact (quadrature based) distributions and integrals.

The central object is the law of ``J(n)``, the product of prime powers taken
in label order while the product stays at most ``n``.  Writing ``t = c/log n``
its mass at ``i`` is

    P(J = i) = int_0^inf i^{-1-t} T(n // i, t) / zeta(1+t) dt,
    T(m, t)  = sum_{q > m} Lambda(q) q^{-1-t},

and with ``zeta(1+t) = (1 + t R(t))/t`` the integrand becomes
``i^{-1-t} [(1 - t^2 R')/(1 + tR)^2 - t S_m(t)/(1 + tR)]`` where ``S_m`` is the
finite sum over ``q <= m``.  This form needs no infinite prime sums, and the
integral is evaluated for all ``i`` at once on composite Gauss-Legendre panels.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .number_theory import (
    ConfigError,
    DomainError,
    EULER_GAMMA,
    MERTENS_B,
    PrimeTables,
    get_tables,
)

# B_2, B_4, ..., B_20
_BERNOULLI = np.array([
    1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6,
    -3617 / 510, 43867 / 798, -174611 / 330,
])

CACHE_VERSION = 1


@dataclass
class Pmf:
    """Probability masses on ``1..n``; ``mass[i]`` is the mass at ``i`` (``mass[0] = 0``)."""

    n: int
    mass: np.ndarray
    tolerance: float = 1e-9
    checksum: str = ""
    error_estimate: float = 0.0

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=np.float64)
        if self.mass.shape != (self.n + 1,):
            raise ValueError("mass must have length n + 1 (index 0 unused)")

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.n + 1)

    def total(self) -> float:
        return float(np.sum(self.mass[1:]))

    def __getitem__(self, i):
        return self.mass[i]

    @classmethod
    def from_masses(cls, masses: Sequence[float], tolerance: float = 1e-12) -> "Pmf":
        m = np.concatenate(([0.0], np.asarray(masses, dtype=np.float64)))
        return cls(len(m) - 1, m, tolerance)

    @classmethod
    def harmonic(cls, n: int) -> "Pmf":
        w = np.concatenate(([0.0], 1.0 / np.arange(1, n + 1)))
        return cls(n, w / w.sum(), 1e-15)

    @classmethod
    def uniform(cls, n: int) -> "Pmf":
        m = np.full(n + 1, 1.0 / n)
        m[0] = 0.0
        return cls(n, m, 1e-15)


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule on panels in ``c = t log n``.

    ``abs_tol`` and ``rel_tol`` are the targets the refinement check is
    compared against; ``max_subdivisions`` caps the panel count.
    """

    method: str = "gauss-legendre-composite"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 64
    nodes_per_panel: int = 16
    edges: Tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0)

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ConfigError("quadrature tolerances must be positive")
        if len(self.edges) - 1 > self.max_subdivisions:
            raise ConfigError("too many panels for max_subdivisions")

    def key(self) -> str:
        return f"{self.method}-{self.nodes_per_panel}-{self.abs_tol:g}-{self.rel_tol:g}-{len(self.edges)}"

    def nodes(self, c_max: float, refine: int = 1):
        """Nodes and weights on ``[0, c_max]`` (``refine`` splits each panel)."""
        edges = [e for e in self.edges if e < c_max] + [c_max]
        if refine > 1:
            fine = []
            for a, b in zip(edges[:-1], edges[1:]):
                fine.extend(np.linspace(a, b, refine + 1)[:-1])
            edges = fine + [c_max]
        x, w = np.polynomial.legendre.leggauss(self.nodes_per_panel)
        xs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            xs.append(0.5 * (b - a) * x + 0.5 * (b + a))
            ws.append(0.5 * (b - a) * w)
        return np.concatenate(xs), np.concatenate(ws)


DEFAULT_QUAD = QuadratureSpec()


# ---------------------------------------------------------------- zeta near 1

def _phi(x):
    """``expm1(-x)/x`` and its derivative, stable near 0."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 1.0)
    xb = np.where(small, 1.0, x)
    # series: -sum_k (-x)^k/(k+1)!
    ser = np.zeros_like(xs)
    dser = np.zeros_like(xs)
    fact = 1.0
    for k in range(0, 12):
        fact *= (k + 1)
        ser -= (-xs) ** k / fact
        if k >= 1:
            dser -= (-1) ** k * k * xs ** (k - 1) / fact
    em = np.expm1(-xb)
    val = em / xb
    dval = (-xb * np.exp(-xb) - em) / (xb * xb)
    return np.where(small, ser, val), np.where(small, dser, dval)


def zeta_regular(t, cutoff: int = 10**4, terms: int = 10):
    """``R(t) = zeta(1+t) - 1/t`` and ``R'(t)`` for ``t >= 0`` (Euler-Maclaurin).

    The pole is removed analytically: ``N^{-t}/t - 1/t`` is evaluated as
    ``log(N) * expm1(-t log N)/(t log N)``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t < 0):
        raise DomainError("zeta_regular needs t >= 0")
    s = 1.0 + t
    N = float(cutoff)
    L = math.log(N)
    k = np.arange(1, cutoff, dtype=np.float64)
    logk = np.log(k)
    powk = np.exp(-np.outer(s, logk))
    head = powk.sum(axis=1)
    dhead = -(powk * logk).sum(axis=1)
    phi, dphi = _phi(t * L)
    pole = L * phi
    dpole = L * L * dphi
    nms = np.exp(-s * L)
    half = 0.5 * nms
    dhalf = -L * half
    corr = np.zeros_like(t)
    dcorr = np.zeros_like(t)
    # term j: B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}
    poch = np.ones_like(t)
    dpoch = np.zeros_like(t)
    for j in range(1, terms + 1):
        if j == 1:
            poch = s.copy()
            dpoch = np.ones_like(t)
        else:
            for a in (2 * j - 3, 2 * j - 2):
                dpoch = dpoch * (s + a) + poch
                poch = poch * (s + a)
        c = _BERNOULLI[j - 1] / math.factorial(2 * j)
        p = np.exp(-(s + 2 * j - 1) * L)
        corr += c * poch * p
        dcorr += c * (dpoch - L * poch) * p
    return head + pole + half + corr, dhead + dpole + dhalf + dcorr


def zeta_near_one(delta) -> float:
    """``zeta(1 + delta)`` for ``delta > 0`` with the ``1/delta`` pole split off."""
    d = np.asarray(delta, dtype=np.float64)
    if np.any(d <= 0):
        raise DomainError("zeta_near_one needs delta > 0")
    r, _ = zeta_regular(np.atleast_1d(d))
    out = 1.0 / np.atleast_1d(d) + r
    return float(out[0]) if d.ndim == 0 else out


# ---------------------------------------------------------------- law of J

def _prime_digest(n: int, tables: PrimeTables) -> str:
    pr = tables.primes_upto(n)
    h = hashlib.sha256()
    h.update(str(n).encode())
    h.update(np.ascontiguousarray(pr).tobytes())
    return h.hexdigest()[:16]


def cache_dir() -> str:
    return os.environ.get("PRIMECOUPLING_CACHE",
                          os.path.join(os.path.expanduser("~"), ".cache", "primecoupling"))


def _cache_path(kind: str, n: int, digest: str, quad: QuadratureSpec) -> str:
    return os.path.join(cache_dir(), f"{kind}_v{CACHE_VERSION}_n{n}_{digest}_{quad.key()}.npz")


def save_pmf(path: str, pmf: Pmf, meta: dict) -> None:
    """Write a Pmf atomically: ``.npz`` with ``mass`` and a JSON header."""
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    header = dict(meta, version=CACHE_VERSION, n=pmf.n, tolerance=pmf.tolerance,
                  checksum=pmf.checksum, error_estimate=pmf.error_estimate)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, mass=pmf.mass, header=np.array(json.dumps(header, sort_keys=True)))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load_pmf(path: str) -> Optional[Pmf]:
    if not os.path.exists(path):
        return None
    try:
        with np.load(path) as z:
            header = json.loads(str(z["header"]))
            mass = z["mass"]
    except (OSError, ValueError, KeyError):
        return None
    if header.get("version") != CACHE_VERSION:
        return None
    return Pmf(header["n"], mass, header["tolerance"], header["checksum"], header["error_estimate"])


def _pmf_J_raw(n: int, tables: PrimeTables, quad: QuadratureSpec, refine: int):
    L = math.log(n)
    c_max = math.log(n) + 14.0 * math.log(10.0) + 2.0
    c, wc = quad.nodes(c_max, refine)
    t = c / L
    R, dR = zeta_regular(t)
    A = (1.0 - t * t * dR) / (1.0 + t * R) ** 2
    B = t / (1.0 + t * R)
    sel = tables.pp_q <= n
    q = tables.pp_q[sel].astype(np.float64)
    lam = np.log(tables.pp_p[sel].astype(np.float64))
    logq = np.log(q)
    i = np.arange(1, n + 1)
    logi = np.log(i.astype(np.float64))
    cnt = np.searchsorted(tables.pp_q[sel], n // i, side="right")
    acc = np.zeros(n)
    for tk, wk, ak, bk in zip(t, wc, A, B):
        cum = np.concatenate(([0.0], np.cumsum(lam * np.exp(-(1.0 + tk) * logq))))
        s_m = cum[cnt]
        acc += wk * np.exp(-(1.0 + tk) * logi) * (ak - bk * s_m)
    return acc / L, c_max


def pmf_J(n: int, tables: Optional[PrimeTables] = None, quad: QuadratureSpec = DEFAULT_QUAD,
          use_cache: bool = True, max_n: int = 10**6) -> Pmf:
    """Exact law of ``J(n)`` on ``1..n``.

    The quadrature is repeated with every panel halved; the largest change
    is stored as ``error_estimate``.  Results are cached on disk keyed by
    ``n``, a digest of the primes up to ``n`` and the quadrature settings.
    """
    if not 2 <= n <= max_n:
        raise DomainError(f"pmf_J supports 2 <= n <= {max_n}, got {n}")
    if tables is None or tables.limit < n:
        tables = get_tables(max(n, 100))
    digest = _prime_digest(n, tables)
    path = _cache_path("pmfJ", n, digest, quad)
    if use_cache:
        cached = load_pmf(path)
        if cached is not None and cached.checksum == digest:
            return cached
    coarse, c_max = _pmf_J_raw(n, tables, quad, 1)
    fine, _ = _pmf_J_raw(n, tables, quad, 2)
    err = float(np.max(np.abs(fine - coarse)))
    neg = float(-min(fine.min(), 0.0))
    mass = np.concatenate(([0.0], np.clip(fine, 0.0, None)))
    tol = max(err, neg, quad.abs_tol)
    pmf = Pmf(n, mass, tol, digest, err)
    if use_cache:
        try:
            save_pmf(path, pmf, {"kind": "pmfJ", "c_max": c_max, "quad": quad.key()})
        except OSError:
            pass
    return pmf


def l1_variation(p: Pmf, q: Pmf) -> float:
    """Unhalved ``sum |p - q|``."""
    if p.n != q.n:
        raise ValueError("pmfs must share support")
    return float(np.sum(np.abs(p.mass[1:] - q.mass[1:])))


def dtv(p: Pmf, q: Pmf) -> float:
    """Half-L1 total variation distance."""
    return 0.5 * l1_variation(p, q)


def dtv_J_harmonic(n: int, tables: Optional[PrimeTables] = None,
                   quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Unhalved L1 distance between the law of ``J(n)`` and the harmonic law."""
    return l1_variation(pmf_J(n, tables, quad), Pmf.harmonic(n))


def pi_array(n: int, tables: PrimeTables) -> np.ndarray:
    """``pi(x)`` for ``x = 0..n``."""
    return np.searchsorted(tables.primes, np.arange(n + 1), side="right")


def pmf_JP0(n: int, tables: Optional[PrimeTables] = None, quad: QuadratureSpec = DEFAULT_QUAD,
            pj: Optional[Pmf] = None, max_n: int = 10**6) -> Pmf:
    """Law ``f_n`` of ``J(n) P0(n)``.

    ``f_n(m) = w(m) + sum_{p | m} w(m/p)`` with
    ``w(j) = P(J = j)/(1 + pi(n/j))``.
    """
    if tables is None or tables.limit < n:
        tables = get_tables(max(n, 100))
    if pj is None:
        pj = pmf_J(n, tables, quad, max_n=max_n)
    j = np.arange(1, n + 1)
    pis = pi_array(n, tables)
    w = np.zeros(n + 1)
    w[1:] = pj.mass[1:] / (1.0 + pis[n // j])
    f = w.copy()
    for p in tables.primes_upto(n):
        p = int(p)
        f[p::p] += w[1 : n // p + 1]
    return Pmf(n, f, pj.tolerance, pj.checksum, pj.error_estimate)


@dataclass
class Uniformizer:
    """Data for turning ``J P0`` into an exactly uniform ``N``.

    ``b[m] = min(f(m), 1/n)/f(m)`` is the probability of keeping ``m``;
    ``gcum`` is the cumulative deficiency law used otherwise.
    """

    n: int
    f: Pmf
    b: np.ndarray = field(repr=False)
    gcum: np.ndarray = field(repr=False)
    dtv: float

    @classmethod
    def from_pmf(cls, f: Pmf) -> "Uniformizer":
        n = f.n
        fm = f.mass
        u = 1.0 / n
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(fm > 0, np.minimum(fm, u) / fm, 1.0)
        b[0] = 1.0
        deficit = np.maximum(u - fm, 0.0)
        deficit[0] = 0.0
        d = float(deficit.sum())
        gcum = np.cumsum(deficit) / d if d > 0 else np.ones(n + 1)
        gcum[0] = 0.0
        gcum[-1] = 1.0
        return cls(n, f, b, gcum, d)


def dtv_forms(f: Pmf) -> Tuple[float, float, float]:
    """The three equal expressions for the distance of ``f`` to uniform:
    ``sum (f - 1/n)^+``, ``sum (f - 1/n)^-`` and half the L1 norm."""
    d = f.mass[1:] - 1.0 / f.n
    return float(np.sum(d[d > 0])), float(-np.sum(d[d < 0])), 0.5 * float(np.sum(np.abs(d)))


def dtv_JP0_uniform(n: int, tables: Optional[PrimeTables] = None,
                    quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Half-L1 distance between the law of ``J(n) P0(n)`` and uniform on ``1..n``."""
    return dtv_forms(pmf_JP0(n, tables, quad))[0]


def _omega_and_kernel(n: int, tables: PrimeTables):
    """``omega(m)`` and ``log`` of the squarefree kernel for ``m = 0..n``."""
    om = np.zeros(n + 1, dtype=np.int64)
    lk = np.zeros(n + 1)
    for p in tables.primes_upto(n):
        p = int(p)
        om[p::p] += 1
        lk[p::p] += math.log(p)
    return om, lk


def h_fun(n: int, m, tables: PrimeTables):
    """``[log s(m) + (1 + omega(m))(log(n/m) - 1)]/(n log n)`` with ``s`` the squarefree kernel."""
    ma = np.atleast_1d(np.asarray(m, dtype=np.int64))
    if np.any(ma < 1) or np.any(ma > n):
        raise DomainError("h_fun needs 1 <= m <= n")
    om, lk = _omega_and_kernel(int(ma.max()), tables)
    val = (lk[ma] + (1 + om[ma]) * (np.log(n / ma) - 1.0)) / (n * math.log(n))
    return float(val[0]) if np.ndim(m) == 0 else val


def g_fun(n: int, tables: PrimeTables) -> np.ndarray:
    """``g_n(m) = (1/n) sum*_{p | m} (n p/m)/(log n (1 + pi(n p/m)))`` for ``m = 0..n``.

    This is ``f_n`` with ``P(J = j)`` replaced by ``1/(j log n)``.
    """
    j = np.arange(1, n + 1)
    pis = pi_array(n, tables)
    w = np.zeros(n + 1)
    w[1:] = 1.0 / (j * math.log(n) * (1.0 + pis[n // j]))
    g = w.copy()
    for p in tables.primes_upto(n):
        p = int(p)
        g[p::p] += w[1 : n // p + 1]
    return g


# ---------------------------------------------------------------- label tail

@dataclass
class TailTable:
    """Hermite table of ``log t`` against ``log F(t)`` for inverting the
    label tail ``F``; ``max_rel_error`` is the validated error in ``t``."""

    n: int
    variant: str
    xs: np.ndarray
    ys: np.ndarray
    ds: np.ndarray
    max_rel_error: float
    model_error: float = 0.0


def _tail_cut(n: int, x_factor: int, x_min: int) -> int:
    return max(x_factor * max(n, 10), x_min)


def label_tail(n: int, t, tables: PrimeTables, variant: str = "kq", x_factor: int = 10,
               x_min: int = 10**6):
    """``F(t)`` and ``F'(t)`` for the items with prime part above ``n``.

    ``variant="kq"``: ``F(t) = sum_{p>n} -log(1 - p^{-1-t})``;
    ``variant="p"`` (no splitting): ``F(t) = sum_{p>n} log(1 + p^{-1-t}/(1 - 1/p))``.
    Primes in ``(n, X]`` with ``X = max(x_factor n, x_min)`` are summed
    directly; beyond ``X`` the sum is ``E1(t log X) + delta(X) X^{-t} + E1((1+2t) log X)/2`` with
    ``delta(X) = B + log log X - sum_{p<=X} 1/p``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    X = _tail_cut(n, x_factor, x_min)
    if tables.limit < X:
        tables = get_tables(X)
    pr = tables.primes
    mid = pr[(pr > n) & (pr <= X)].astype(np.float64)
    logp = np.log(mid)
    F = np.zeros_like(t)
    dF = np.zeros_like(t)
    chunk = max(1, 4_000_000 // max(len(mid), 1))
    for s in range(0, len(t), chunk):
        ts = t[s : s + chunk]
        x = np.exp(-np.outer(1.0 + ts, logp))
        if variant == "kq":
            F[s : s + chunk] = -np.log1p(-x).sum(axis=1)
            dF[s : s + chunk] = -(logp * x / (1.0 - x)).sum(axis=1)
        else:
            y = x / (1.0 - 1.0 / mid)
            F[s : s + chunk] = np.log1p(y).sum(axis=1)
            dF[s : s + chunk] = -(logp * y / (1.0 + y)).sum(axis=1)
    LX = math.log(X)
    recip = float(np.sum(1.0 / pr[pr <= X]))
    delta = MERTENS_B + math.log(LX) - recip
    tail = special.exp1(t * LX) + delta * np.exp(-t * LX) + 0.5 * special.exp1((1 + 2 * t) * LX)
    dtail = (-np.exp(-t * LX) / t - LX * delta * np.exp(-t * LX)
             - np.exp(-(1 + 2 * t) * LX) / (1 + 2 * t))
    if variant == "p":
        # log(1 + x/(1-1/p)) ~ x + x/p - x^2/2 instead of x + x^2/2
        z1, z2 = (1 + t) * LX, (1 + 2 * t) * LX
        tail = tail + special.exp1(z1) - special.exp1(z2)
        dtail = dtail - np.exp(-z1) / (1 + t) + 2.0 * np.exp(-z2) / (1 + 2 * t)
    return F + tail, dF + dtail


def build_tail_table(n: int, tables: PrimeTables, variant: str = "kq",
                     points: int = 1500) -> TailTable:
    """Tabulate ``log t`` as a function of ``log F(t)`` for CDF inversion.

    The grid covers ``F`` from about ``1e-17`` to about ``40``; accuracy is
    checked at the midpoints of the grid and stored as ``max_rel_error``.
    """
    if n < 1:
        raise DomainError("n must be positive")
    lo = 1e-19 / math.log(n + 2)
    hi = 45.0 / math.log(n + 1.5) + 2.0
    lt = np.linspace(math.log(lo), math.log(hi), points)
    t = np.exp(lt)
    F, dF = label_tail(n, t, tables, variant)
    keep = F > 0
    lt, t, F, dF = lt[keep], t[keep], F[keep], dF[keep]
    xs = np.log(F)
    # d log t / d log F = F / (t F')
    ds = F / (t * dF)
    order = np.argsort(xs)
    xs, ys, ds = xs[order], lt[order], ds[order]
    # validate at midpoints of t
    from ._kernels_py import invert_tail

    mids = np.exp(0.5 * (lt[1:] + lt[:-1]))
    Fm, _ = label_tail(n, mids, tables, variant)
    err = 0.0
    for tm, fm in zip(mids, Fm):
        if fm <= 0:
            continue
        est = invert_tail(float(fm), xs, ys, ds)
        err = max(err, abs(est - tm) / tm)
    # the closed-form tail treats the Mertens remainder as frozen at X; its
    # size there bounds the absolute error in F
    X = _tail_cut(n, 10, 10**6)
    tab = tables if tables.limit >= X else get_tables(X)
    pr = tab.primes[tab.primes <= X]
    model_err = abs(float(np.sum(1.0 / pr)) - MERTENS_B - math.log(math.log(X)))
    return TailTable(n, variant, np.ascontiguousarray(xs), np.ascontiguousarray(ys),
                     np.ascontiguousarray(ds), err, model_err)


# ---------------------------------------------------------------- Dickman

class _Dickman:
    """Piecewise Chebyshev representation of rho on unit intervals."""

    def __init__(self, degree: int = 40):
        self.degree = degree
        self.pieces = []  # pieces[k] represents rho on [k+1, k+2]

    def _extend(self, upto: int):
        C = np.polynomial.chebyshev.Chebyshev
        while len(self.pieces) < upto:
            k = len(self.pieces) + 1  # building [k, k+1]
            if k == 1:
                def g(s):
                    return 1.0 / s
                start = 1.0
            else:
                prev = self.pieces[-1]

                def g(s, prev=prev):
                    return prev(s - 1.0) / s
                start = float(prev(float(k)))
            G = C.interpolate(g, self.degree, domain=[k, k + 1])
            I = G.integ(lbnd=k)
            self.pieces.append(start - I)

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        out = np.where(u <= 1.0, 1.0, 0.0)
        out = np.where(u < 0, 0.0, out)
        big = u > 1.0
        if np.any(big):
            kmax = int(np.floor(np.max(u[big])))
            self._extend(kmax)
            for idx in np.flatnonzero(big.ravel()):
                x = u.ravel()[idx]
                k = min(int(math.floor(x)), kmax)
                if x == k and k > 1:
                    k -= 1
                out.ravel()[idx] = self.pieces[k - 1](x)
        return float(out) if out.ndim == 0 else out


_RHO = _Dickman()


def dickman_rho(u):
    """Dickman's function: ``rho = 1`` on ``[0, 1]`` and ``u rho'(u) = -rho(u - 1)``."""
    return _RHO(u)


# ---------------------------------------------------------------- misc integrals

def region_mean(b: float) -> float:
    """Mean number of points of intensity ``exp(-w y)`` in ``(0, b]^2``:
    ``int_0^{b^2} (1 - e^{-u})/u du``."""
    if b <= 0:
        raise DomainError("b must be positive")
    top = b * b

    def f(u):
        return -math.expm1(-u) / u if u > 0 else 1.0

    if top <= 1.0:
        val, _ = integrate.quad(f, 0.0, top, epsabs=1e-13, epsrel=1e-12)
        return val
    a, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)
    # substitute u = e^s on [1, b^2]
    c, _ = integrate.quad(lambda s: -math.expm1(-math.exp(s)), 0.0, math.log(top),
                          epsabs=1e-13, epsrel=1e-12, limit=200)
    return a + c


def lower_b0_piece() -> float:
    """Signed closed form ``log 2 (-gamma) - [x log x - x]_0^{log 2}``.

    This equals ``int_0^{log 2} (-gamma - log x) dx``; the integrand changes
    sign at ``e^{-gamma}``, so the absolute area is computed separately in
    :meth:`MertensMap.b0_integral`.
    """
    l2 = math.log(2.0)
    return l2 * (-EULER_GAMMA) - (l2 * math.log(l2) - l2)
