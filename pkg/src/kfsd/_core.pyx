# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, NAN

cnp.import_array()


def sq_dists(X, Y, w):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t q = x.shape[0], n = y.shape[0], m = x.shape[1]
    out_arr = np.empty((q, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef double acc, d
    for i in range(q):
        for j in range(n):
            acc = 0.0
            for t in range(m):
                d = x[i, t] - y[j, t]
                acc += ww[t] * d * d
            out[i, j] = acc
    return out_arr


def kfsd_gaussian(D2q, Kyy, double sigma):
    cdef const double[:, ::1] d2 = np.ascontiguousarray(D2q, dtype=np.float64)
    cdef const double[:, ::1] k = np.ascontiguousarray(Kyy, dtype=np.float64)
    # vectorized transcendental part: em = exp(-d2/sigma^2) - 1
    cdef const double[:, ::1] em = np.expm1(np.asarray(d2) * (-1.0 / (sigma * sigma)))
    cdef Py_ssize_t q = d2.shape[0], n = d2.shape[1]
    out_arr = np.empty(q, dtype=np.float64)
    cdef double[::1] out = out_arr
    a_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] a = a_arr
    cdef Py_ssize_t i, j, l, cnt
    cdef double sa, cross, quad, r0, r1, total
    for i in range(q):
        sa = 0.0
        cross = 0.0
        cnt = 0
        for j in range(n):
            if d2[i, j] > 0.0:
                a[j] = 1.0 / sqrt(-2.0 * em[i, j])
                sa += a[j]
                cross += a[j] * (1.0 + em[i, j])
                cnt += 1
            else:
                a[j] = 0.0
        if cnt == 0:
            out[i] = NAN
            continue
        # K is symmetric: diagonal once, each off-diagonal pair twice
        quad = 0.0
        for j in range(n):
            if a[j] == 0.0:
                continue
            r0 = 0.0
            r1 = 0.0
            l = j + 1
            while l + 1 < n:
                r0 += k[j, l] * a[l]
                r1 += k[j, l + 1] * a[l + 1]
                l += 2
            if l < n:
                r0 += k[j, l] * a[l]
            quad += a[j] * (k[j, j] * a[j] + 2.0 * (r0 + r1))
        total = sa * sa + quad - 2.0 * sa * cross
        if total < 0.0:
            total = 0.0
        out[i] = 1.0 - sqrt(total) / cnt
    return out_arr


def band_counts(X, Y):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    # each grid column of Y sorted, stored row-wise for contiguous searches
    cdef const double[:, ::1] ys = np.ascontiguousarray(np.sort(np.asarray(Y, dtype=np.float64), axis=0).T)
    cdef Py_ssize_t q = x.shape[0], m = x.shape[1], n = ys.shape[1]
    below_arr = np.empty((q, m), dtype=np.int64)
    above_arr = np.empty((q, m), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] below = below_arr
    cdef cnp.int64_t[:, ::1] above = above_arr
    cdef Py_ssize_t i, t, lo, hi, mid
    cdef double v
    for i in range(q):
        for t in range(m):
            v = x[i, t]
            # first index with ys >= v
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if ys[t, mid] < v:
                    lo = mid + 1
                else:
                    hi = mid
            below[i, t] = lo
            # first index with ys > v
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if ys[t, mid] <= v:
                    lo = mid + 1
                else:
                    hi = mid
            above[i, t] = n - lo
    return below_arr, above_arr
