# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot loops (see ``_kernels_py`` for the reference).

Uniform doubles come straight from the generator's ``bitgen_t`` so the draw
order matches ``Generator.random`` exactly.
"""
import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, exp, ceil, floor
from libc.stdlib cimport malloc, realloc, free
from numpy.random cimport bitgen_t

cnp.import_array()

cdef bitgen_t* _bitgen(gen) except NULL:
    capsule = gen.bit_generator.capsule
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _u(bitgen_t* bg) nogil:
    return bg.next_double(bg.state)


def smallest_prime_factors(Py_ssize_t limit):
    """Linear sieve; ``spf[0] = spf[1] = 0``."""
    cdef cnp.ndarray[cnp.int32_t, ndim=1] spf_arr = np.zeros(limit + 1, dtype=np.int32)
    cdef int[::1] spf = spf_arr
    cdef Py_ssize_t cap = limit // 2 + 16
    cdef int* primes = <int*> malloc(cap * sizeof(int))
    cdef Py_ssize_t np_ = 0, i, j
    cdef long long ip
    cdef int p, s
    if primes == NULL:
        raise MemoryError()
    with nogil:
        for i in range(2, limit + 1):
            if spf[i] == 0:
                spf[i] = <int> i
                primes[np_] = <int> i
                np_ += 1
            s = spf[i]
            for j in range(np_):
                p = primes[j]
                ip = <long long> p * i
                if p > s or ip > limit:
                    break
                spf[ip] = p
    free(primes)
    return spf_arr


def feller_batch(gen, Py_ssize_t trials, long long n, long long horizon):
    cdef bitgen_t* bg = _bitgen(gen)
    out_arr = np.zeros((5, trials), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    cdef long long* cn = <long long*> malloc((n + 2) * sizeof(long long))
    cdef long long* cinf = <long long*> malloc((n + 2) * sizeof(long long))
    cdef Py_ssize_t tcap = 256
    cdef long long* touched = <long long*> malloc(tcap * sizeof(long long))
    cdef Py_ssize_t t, nt, r
    cdef long long prev, last, k, s, a, i, extra, missing, d
    cdef double x, dh = <double> horizon
    cdef int mono
    if cn == NULL or cinf == NULL or touched == NULL:
        raise MemoryError()
    for r in range(n + 2):
        cn[r] = 0
        cinf[r] = 0
    lock = gen.bit_generator.lock
    with lock:
        for t in range(trials):
            nt = 0
            prev = 1
            last = 1
            while True:
                x = prev / (1.0 - _u(bg))
                if x >= dh:
                    break
                k = <long long> x + 1
                s = k - prev
                if nt + 2 >= tcap:
                    tcap *= 2
                    touched = <long long*> realloc(touched, tcap * sizeof(long long))
                if k <= n:
                    cn[s] += 1
                    cinf[s] += 1
                    touched[nt] = s
                    nt += 1
                    last = k
                elif s <= n:
                    cinf[s] += 1
                    touched[nt] = s
                    nt += 1
                prev = k
            a = n + 1 - last
            cn[a] += 1
            touched[nt] = a
            nt += 1
            extra = 0
            missing = 0
            mono = 1
            for r in range(nt):
                i = touched[r]
                if cn[i] < 0:
                    continue  # already visited
                d = cn[i] - cinf[i]
                if d > 0:
                    extra += d
                else:
                    missing -= d
                if cn[i] > cinf[i] + (1 if i == a else 0):
                    mono = 0
                cn[i] = -1
                cinf[i] = 0
            for r in range(nt):
                cn[touched[r]] = 0
            out[0, t] = extra + missing
            out[1, t] = extra
            out[2, t] = missing
            out[3, t] = a
            out[4, t] = mono
    free(cn)
    free(cinf)
    free(touched)
    return out_arr


cdef double _invert_tail(double g, double[::1] xs, double[::1] ys, double[::1] ds) nogil:
    cdef Py_ssize_t m = xs.shape[0], lo, hi, mid
    cdef double x, h, s, s2, s3, y
    if g <= 0.0:
        return 1.0 / 0.0
    x = log(g)
    if x <= xs[0]:
        return exp(ys[0] + ds[0] * (x - xs[0]))
    if x >= xs[m - 1]:
        return exp(ys[m - 1] + ds[m - 1] * (x - xs[m - 1]))
    lo = 0
    hi = m - 1
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
    return exp(y)


cdef inline Py_ssize_t _count_le(long long[::1] arr, long long x) nogil:
    cdef Py_ssize_t lo = 0, hi = arr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def invert_tail(double g, double[::1] xs, double[::1] ys, double[::1] ds):
    return _invert_tail(g, xs, ys, ds)


def grow_batch(gen, Py_ssize_t trials, long long n, long long[::1] primes,
               double[::1] log_primes, bint split, double[::1] xs, double[::1] ys,
               double[::1] ds, int[::1] spf, double[::1] bvec, double[::1] gcum):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef Py_ssize_t npr = primes.shape[0]
    out_arr = np.zeros((7, trials), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    inv_arr = 1.0 / np.asarray(primes, dtype=np.float64)
    cdef double[::1] inv_p = inv_arr
    cdef bint exact = bvec.shape[0] > 0
    cdef int* zcount = <int*> malloc((npr + 1) * sizeof(int))
    cdef Py_ssize_t* zidx = <Py_ssize_t*> malloc((npr + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t icap = 64
    cdef long long* it_q = <long long*> malloc(icap * sizeof(long long))
    cdef double* it_lab = <double*> malloc(icap * sizeof(double))
    cdef Py_ssize_t t, i, nz, ni, j, best, lo, hi, mid, idx, kk
    cdef double up, lp, lab, g, mlab, ui, u1, u2, tmp
    cdef long long z, r, k, q, jval, p0, m, nval, p, e, sum_z, sum_c, sum_min, rr
    cdef long long tq
    cdef int coupled
    if zcount == NULL or zidx == NULL or it_q == NULL or it_lab == NULL:
        raise MemoryError()
    for i in range(npr + 1):
        zcount[i] = 0
    lock = gen.bit_generator.lock
    with lock:
        for t in range(trials):
            nz = 0
            for i in range(npr):
                up = 1.0 - _u(bg)
                if up <= inv_p[i]:
                    z = <long long> (-log(up) / log_primes[i])
                    if z < 1:
                        z = 1
                    zcount[i] = <int> z
                    zidx[nz] = i
                    nz += 1
            ni = 0
            for j in range(nz):
                i = zidx[j]
                z = zcount[i]
                lp = log_primes[i]
                if split:
                    r = z
                    while r > 0:
                        if r == 1:
                            k = 1
                        else:
                            k = 1 + <long long> (_u(bg) * r)
                            if k > r:
                                k = r
                        r -= k
                        lab = -log(1.0 - _u(bg)) / (k * lp)
                        if ni >= icap:
                            icap *= 2
                            it_q = <long long*> realloc(it_q, icap * sizeof(long long))
                            it_lab = <double*> realloc(it_lab, icap * sizeof(double))
                        if k * lp > 43.0:
                            q = n + 1
                        else:
                            q = 1
                            for e in range(k):
                                q *= primes[i]
                        it_q[ni] = q
                        it_lab[ni] = lab
                        ni += 1
                else:
                    for r in range(z):
                        lab = -log(1.0 - _u(bg)) / lp
                        if ni >= icap:
                            icap *= 2
                            it_q = <long long*> realloc(it_q, icap * sizeof(long long))
                            it_lab = <double*> realloc(it_lab, icap * sizeof(double))
                        it_q[ni] = primes[i]
                        it_lab[ni] = lab
                        ni += 1
            g = -log(1.0 - _u(bg))
            mlab = _invert_tail(g, xs, ys, ds)
            # insertion sort by label, descending
            for i in range(1, ni):
                lab = it_lab[i]
                tq = it_q[i]
                j = i - 1
                while j >= 0 and it_lab[j] < lab:
                    it_lab[j + 1] = it_lab[j]
                    it_q[j + 1] = it_q[j]
                    j -= 1
                it_lab[j + 1] = lab
                it_q[j + 1] = tq
            jval = 1
            for i in range(ni):
                if mlab > it_lab[i]:
                    break
                if it_q[i] > n // jval:
                    break
                jval *= it_q[i]
            kk = 1 + _count_le(primes, n // jval)
            ui = 1.0 - _u(bg)
            idx = <Py_ssize_t> ceil(kk * ui) - 1
            if idx >= kk:
                idx = kk - 1
            if idx < 0:
                idx = 0
            p0 = 1 if idx == 0 else primes[idx - 1]
            m = jval * p0
            coupled = 1
            nval = m
            if exact:
                u1 = 1.0 - _u(bg)
                if u1 > bvec[m]:
                    coupled = 0
                    u2 = 1.0 - _u(bg)
                    lo = 1
                    hi = n
                    while lo < hi:
                        mid = (lo + hi) >> 1
                        if gcum[mid] >= u2:
                            hi = mid
                        else:
                            lo = mid + 1
                    nval = lo
            sum_z = 0
            for j in range(nz):
                sum_z += zcount[zidx[j]]
            sum_c = 0
            sum_min = 0
            rr = nval
            while rr > 1:
                p = spf[rr]
                e = 0
                while rr % p == 0:
                    rr //= p
                    e += 1
                sum_c += e
                i = _count_le(primes, p) - 1
                z = zcount[i]
                sum_min += e if e < z else z
            for j in range(nz):
                zcount[zidx[j]] = 0
            out[0, t] = jval
            out[1, t] = p0
            out[2, t] = nval
            out[3, t] = coupled
            out[4, t] = (sum_c - sum_min) + (sum_z - sum_min)
            out[5, t] = sum_c - sum_min
            out[6, t] = sum_z - sum_min
    free(zcount)
    free(zidx)
    free(it_q)
    free(it_lab)
    return out_arr
