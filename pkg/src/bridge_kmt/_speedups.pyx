# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _kernel.py.

Same splitmix64 streams, same draw order, same left-associated float
expressions, same libm calls (build pins -ffp-contract=off), so batches
match the pure kernel bit for bit.  Any edit here must be mirrored there.
"""

from libc.math cimport ceil, erfc, exp, fabs, floor, log, sqrt

import numpy as np

cdef unsigned long long GAMMA = 0x9E3779B97F4A7C15ULL
cdef unsigned long long NODE_SALT = 0xC2B2AE3D27D4EB4FULL
cdef double INV_2_53 = 1.1102230246251565e-16
cdef long long ZP_BIAS = (<long long>1) << 34

cdef double SQRT2 = sqrt(2.0)
cdef double SQRT2PI = sqrt(2.0 * 3.141592653589793)

cdef double[6] _A
cdef double[5] _B
cdef double[6] _C
cdef double[4] _D
_A[0] = -3.969683028665376e+01; _A[1] = 2.209460984245205e+02
_A[2] = -2.759285104469687e+02; _A[3] = 1.383577518672690e+02
_A[4] = -3.066479806614716e+01; _A[5] = 2.506628277459239e+00
_B[0] = -5.447609879822406e+01; _B[1] = 1.615858368580409e+02
_B[2] = -1.556989798598866e+02; _B[3] = 6.680131188771972e+01
_B[4] = -1.328068155288572e+01
_C[0] = -7.784894002430293e-03; _C[1] = -3.223964580411365e-01
_C[2] = -2.400758277161838e+00; _C[3] = -2.549732539343734e+00
_C[4] = 4.374664141464968e+00;  _C[5] = 2.938163982698783e+00
_D[0] = 7.784695709041462e-03;  _D[1] = 3.224671290700398e-01
_D[2] = 2.445134137142996e+00;  _D[3] = 3.754408661907416e+00


cdef inline unsigned long long mix64(unsigned long long x) nogil:
    x ^= x >> 30
    x = x * 0xBF58476D1CE4E5B9ULL
    x ^= x >> 27
    x = x * 0x94D049BB133111EBULL
    x ^= x >> 31
    return x


cdef inline unsigned long long c_sample_seed(unsigned long long seed,
                                             unsigned long long idx) nogil:
    return mix64(seed + idx * GAMMA)


cdef inline unsigned long long c_node_seed(unsigned long long samp,
                                           unsigned long long node_id) nogil:
    return mix64(samp ^ (node_id * NODE_SALT))


cdef inline double c_u01_at(unsigned long long state, unsigned long long j) nogil:
    cdef unsigned long long x = mix64(state + (j + 1) * GAMMA)
    return (<double>(x >> 11) + 0.5) * INV_2_53


cdef double _acklam(double p) nogil:
    cdef double q, r
    if p < 0.02425:
        q = sqrt(-2.0 * log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


cdef double _quantile_half(double p) nogil:
    cdef double x = _acklam(p)
    cdef double e, u
    cdef int i
    for i in range(2):
        e = 0.5 * erfc(-x / SQRT2) - p
        u = e * SQRT2PI * exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


cdef inline double c_quantile(double p) nogil:
    if p > 0.5:
        return -_quantile_half(1.0 - p)
    return _quantile_half(p)


cdef inline Py_ssize_t bisect_left(double[::1] a, double target) nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    return lo


def py_quantile(double p):
    """C quantile exposed for twin-identity tests."""
    return c_quantile(p)


def py_u01(object state, object j):
    """C uniform stream exposed for twin-identity tests."""
    return c_u01_at(<unsigned long long>(state & 0xFFFFFFFFFFFFFFFF),
                    <unsigned long long>j)


cdef long long _node_c(dict cond, object build_cond, double[::1] s, double[::1] b,
                       long long t0, long long size, long long zp,
                       unsigned long long samp, unsigned long long node_id,
                       long long n_min, double sigma_p, int mode,
                       double eps3) except -1:
    cdef unsigned long long state
    cdef long long draws = 0, j = 0
    if size == 1:
        return 0
    state = c_node_seed(samp, node_id)

    cdef object entry
    cdef tuple tentry
    cdef long long wmin, s_rel, i, r, t, k, m, w, ilo, ihi, key, idx
    cdef double[::1] cum
    cdef Py_ssize_t csize, pos
    cdef double u, u1, u2, bb, total, center, lo, hi, clo, chi, rest, xi, gm

    if size <= n_min:
        draws = 0
        s_rel = 0
        j = 0
        for i in range(1, size):
            key = ((<long long>1) << 49) | ((size - i) << 35) | (zp - s_rel + ZP_BIAS)
            entry = cond.get(key)
            if entry is None:
                entry = build_cond(1, size - i, zp - s_rel)
            tentry = <tuple>entry
            wmin = tentry[0]
            cum = tentry[1]
            csize = cum.shape[0]
            u = c_u01_at(state, <unsigned long long>j)
            j += 1
            pos = bisect_left(cum, u * cum[csize - 1])
            if pos >= csize:
                pos = csize - 1
            s_rel += wmin + pos
            s[t0 + i] = s[t0] + s_rel
            draws += 1
        bb = 0.0
        for t in range(1, size):
            r = size - t
            u = c_u01_at(state, <unsigned long long>j)
            j += 1
            bb = bb * <double>r / <double>(r + 1) + sigma_p * sqrt(<double>r / <double>(r + 1)) \
                * c_quantile(u)
            b[t0 + t] = bb
            draws += 1
        return draws

    k = size >> 1
    m = size - k
    u1 = c_u01_at(state, 0)
    key = (k << 49) | (m << 35) | (zp + ZP_BIAS)
    entry = cond.get(key)
    if entry is None:
        entry = build_cond(k, m, zp)
    tentry = <tuple>entry
    wmin = tentry[0]
    cum = tentry[1]
    csize = cum.shape[0]
    total = cum[csize - 1]
    pos = bisect_left(cum, u1 * total)
    if pos >= csize:
        pos = csize - 1
    w = wmin + pos
    draws = 1
    if mode == 1:
        center = <double>zp * <double>k / <double>size
        lo = center - 2.0 * eps3 * <double>k
        hi = center + 2.0 * eps3 * <double>k
        if not (lo <= <double>w and <double>w <= hi):
            u2 = c_u01_at(state, 1)
            draws += 1
            if <double>w < lo:
                ilo = <long long>ceil(lo) - wmin
                if ilo < <long long>csize:
                    clo = cum[ilo - 1]
                else:
                    clo = cum[csize - 1]
                if clo > 0.0:
                    pos = bisect_left(cum, u2 * clo)
                    w = wmin + pos
            else:
                ihi = <long long>floor(hi) - wmin
                if ihi >= 0:
                    chi = cum[ihi]
                else:
                    chi = 0.0
                rest = total - chi
                if rest > 0.0:
                    pos = bisect_left(cum, chi + u2 * rest)
                    if pos >= csize:
                        pos = csize - 1
                    w = wmin + pos
    xi = c_quantile(u1)
    s[t0 + k] = s[t0] + w
    draws += _node_c(cond, build_cond, s, b, t0, k, w, samp, 2 * node_id,
                     n_min, sigma_p, mode, eps3)
    draws += _node_c(cond, build_cond, s, b, t0 + k, m, zp - w, samp,
                     2 * node_id + 1, n_min, sigma_p, mode, eps3)
    gm = sigma_p * sqrt(<double>(k * m) / <double>size) * xi
    for t in range(1, k + 1):
        b[t0 + t] += gm * (<double>t / <double>k)
    for t in range(k + 1, size):
        b[t0 + t] += gm * (<double>(size - t) / <double>m)
    return draws


def sample_batch(dict cond, object build_cond, long long n, long long z,
                 long long n_min, double sigma_p, int mode, double eps3,
                 object seed, long long idx0, long long count, bint collect):
    """Sample `count` coupled pairs; see _kernel.sample_batch."""
    cdef unsigned long long cseed = <unsigned long long>(seed & 0xFFFFFFFFFFFFFFFF)
    deltas_np = np.empty(count)
    wroots_np = np.empty(count)
    xicnt_np = np.zeros(count, dtype=np.int64)
    spaths_np = np.empty((count, n + 1)) if collect else None
    bpaths_np = np.empty((count, n + 1)) if collect else None
    s_np = np.zeros(n + 1)
    b_np = np.zeros(n + 1)

    cdef double[::1] deltas = deltas_np
    cdef double[::1] wroots = wroots_np
    cdef long long[::1] xicnt = xicnt_np
    cdef double[:, ::1] spaths = spaths_np if collect else None
    cdef double[:, ::1] bpaths = bpaths_np if collect else None
    cdef double[::1] s = s_np
    cdef double[::1] b = b_np

    cdef long long c, t
    cdef unsigned long long samp
    cdef double dz = <double>z / <double>n
    cdef double maxd, d

    for c in range(count):
        samp = c_sample_seed(cseed, <unsigned long long>(idx0 + c))
        for t in range(n + 1):
            s[t] = 0.0
            b[t] = 0.0
        s[n] = <double>z
        xicnt[c] = _node_c(cond, build_cond, s, b, 0, n, z, samp, 1,
                           n_min, sigma_p, mode, eps3)
        maxd = 0.0
        for t in range(n + 1):
            d = fabs(b[t] + <double>t * dz - s[t])
            if d > maxd:
                maxd = d
        deltas[c] = maxd
        wroots[c] = s[n >> 1]
        if collect:
            for t in range(n + 1):
                spaths[c, t] = s[t]
                bpaths[c, t] = b[t]
    return deltas_np, wroots_np, xicnt_np, spaths_np, bpaths_np
