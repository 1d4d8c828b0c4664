"""Pure-Python versions of the hot loops.

Every random quantity is derived from uniform doubles drawn in a fixed order,
so these functions consume the generator exactly like the compiled versions
and return identical results for the same seed.
"""
import math

import numpy as np


def smallest_prime_factors(limit):
    """Smallest prime factor table via a numpy Eratosthenes sieve."""
    spf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    idx = np.arange(limit + 1, dtype=np.int32)
    rest = spf == 0
    spf[rest] = idx[rest]
    spf[:2] = 0
    return spf


def feller_trial(gen, n, horizon, cn, cinf):
    """One trial of the Feller coupling by skip sampling.

    Fills the count arrays ``cn`` (cycle counts at size ``n``) and ``cinf``
    (spacing counts up to ``horizon``) and returns
    ``(indel, extra, missing, A, monotone_ok)``; the arrays are reset before
    returning.
    """
    touched = []
    prev = 1
    last = 1
    while True:
        x = prev / (1.0 - gen.random())
        if x >= horizon:
            break
        k = int(x) + 1
        s = k - prev
        if k <= n:
            cn[s] += 1
            cinf[s] += 1
            touched.append(s)
            last = k
        elif s <= n:
            cinf[s] += 1
            touched.append(s)
        prev = k
    a = n + 1 - last
    cn[a] += 1
    touched.append(a)
    indel = extra = missing = 0
    mono = 1
    for i in set(touched):
        d = int(cn[i]) - int(cinf[i])
        if d > 0:
            extra += d
        else:
            missing -= d
        if cn[i] > cinf[i] + (1 if i == a else 0):
            mono = 0
        cn[i] = 0
        cinf[i] = 0
    indel = extra + missing
    return indel, extra, missing, a, mono


def feller_batch(gen, trials, n, horizon):
    out = np.zeros((5, trials), dtype=np.int64)
    cn = np.zeros(n + 2, dtype=np.int64)
    cinf = np.zeros(n + 2, dtype=np.int64)
    for t in range(trials):
        out[:, t] = feller_trial(gen, n, horizon, cn, cinf)
    return out


def invert_tail(g, xs, ys, ds):
    """Solve ``F(t) = g`` from a Hermite table of ``log t`` against ``log F``."""
    if g <= 0.0:
        return math.inf
    x = math.log(g)
    m = len(xs)
    if x <= xs[0]:
        return math.exp(ys[0] + ds[0] * (x - xs[0]))
    if x >= xs[m - 1]:
        return math.exp(ys[m - 1] + ds[m - 1] * (x - xs[m - 1]))
    lo, hi = 0, m - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if xs[mid] <= x:
            lo = mid
        else:
            hi = mid
    h = xs[hi] - xs[lo]
    s = (x - xs[lo]) / h
    s2 = s * s
    s3 = s2 * s
    y = ((2 * s3 - 3 * s2 + 1) * ys[lo] + (s3 - 2 * s2 + s) * h * ds[lo]
         + (-2 * s3 + 3 * s2) * ys[hi] + (s3 - s2) * h * ds[hi])
    return math.exp(y)


def _bsearch_right(arr, x):
    """Number of entries of sorted ``arr`` that are <= x."""
    lo, hi = 0, len(arr)
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def grow_trial(gen, n, primes, log_primes, inv_p, split, xs, ys, ds,
               spf, bvec, gcum, record=None):
    """One trial of the integer-growing construction.

    Returns ``(J, P0, N, coupled, indel, extra, missing)``.  When ``record`` is
    a dict it receives the item list, the labels, ``M`` and the ``Z`` counts.
    """
    npr = len(primes)
    u = gen.random(npr)
    hit = np.flatnonzero((1.0 - u) <= inv_p)
    zidx = []
    zval = []
    for i in hit:
        up = 1.0 - u[i]
        z = int(-math.log(up) / log_primes[i])
        if z < 1:
            z = 1
        zidx.append(int(i))
        zval.append(z)
    # items: (q, weight, label, prime index)
    items = []
    for i, z in zip(zidx, zval):
        p = int(primes[i])
        lp = log_primes[i]
        if split:
            r = z
            while r > 0:
                if r == 1:
                    k = 1
                else:
                    k = 1 + int(gen.random() * r)
                    if k > r:
                        k = r
                r -= k
                lab = -math.log(1.0 - gen.random()) / (k * lp)
                items.append((p ** k, k * lp, lab, i))
        else:
            for _ in range(z):
                lab = -math.log(1.0 - gen.random()) / lp
                items.append((p, lp, lab, i))
    g = -math.log(1.0 - gen.random())
    m_lab = invert_tail(g, xs, ys, ds)
    order = sorted(range(len(items)), key=lambda j: -items[j][2])
    jval = 1
    for j in order:
        q, _, lab, _ = items[j]
        if m_lab > lab:
            break
        if jval * q > n:
            break
        jval *= q
    kk = 1 + _bsearch_right(primes, n // jval)
    ui = 1.0 - gen.random()
    idx = int(math.ceil(kk * ui)) - 1
    if idx >= kk:
        idx = kk - 1
    if idx < 0:
        idx = 0
    p0 = 1 if idx == 0 else int(primes[idx - 1])
    m = jval * p0
    coupled = 1
    nval = m
    if len(bvec):
        u1 = 1.0 - gen.random()
        if u1 > bvec[m]:
            coupled = 0
            u2 = 1.0 - gen.random()
            nval = _bsearch_left(gcum, u2, n)
    # indel between factorisation of N and the Z counts
    zmap = dict(zip(zidx, zval))
    sum_z = sum(zval)
    sum_c = 0
    sum_min = 0
    r = nval
    while r > 1:
        p = int(spf[r])
        e = 0
        while r % p == 0:
            r //= p
            e += 1
        sum_c += e
        pi_idx = _bsearch_right(primes, p) - 1
        sum_min += min(e, zmap.get(pi_idx, 0))
    extra = sum_c - sum_min
    missing = sum_z - sum_min
    if record is not None:
        record["items"] = items
        record["M"] = m_lab
        record["Z"] = {int(primes[i]): z for i, z in zmap.items()}
    return jval, p0, nval, coupled, extra + missing, extra, missing


def _bsearch_left(gcum, u, n):
    """Smallest m in 1..n with gcum[m] >= u."""
    lo, hi = 1, n
    while lo < hi:
        mid = (lo + hi) >> 1
        if gcum[mid] >= u:
            hi = mid
        else:
            lo = mid + 1
    return lo


def grow_batch(gen, trials, n, primes, log_primes, split, xs, ys, ds, spf, bvec, gcum):
    inv_p = 1.0 / primes.astype(np.float64)
    out = np.zeros((7, trials), dtype=np.int64)
    for t in range(trials):
        out[:, t] = grow_trial(gen, n, primes, log_primes, inv_p, split, xs, ys, ds,
                               spf, bvec, gcum)
    return out
