# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the oracle grid and the typicality tests."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "cython"


def rate_grid(qa, r2, rh, double tol):
    cdef double[::1] q = np.ascontiguousarray(qa, dtype=np.float64)
    cdef double[::1] a2 = np.ascontiguousarray(r2, dtype=np.float64)
    cdef double[::1] ah = np.ascontiguousarray(rh, dtype=np.float64)
    cdef Py_ssize_t m = a2.shape[0], i
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double x2y3 = q[0], x2z = q[1], x2zx1 = q[2], yh = q[3], wzb = q[4], wze = q[5]
    cdef double a = q[6], x1y3 = q[7], x1z = q[8], x1zx2 = q[9], x1x2z = q[10]
    cdef double p2, ph, s, t, rt
    cdef bint direct_ok, cf_ok
    with nogil:
        for i in range(m):
            p2 = a2[i]
            ph = ah[i]
            if not ((p2 > x2z + tol and ph > x2z + wze + tol) or (ph - p2 > wze + tol)):
                continue
            direct_ok = p2 <= 0.0 or p2 < x2y3 - tol
            cf_ok = ph < x2y3 + wzb - tol or direct_ok
            if not cf_ok:
                continue
            s = a
            t = a + yh + x2y3 - ph
            if t < s:
                s = t
            t = a + yh + p2 - ph
            if t < s:
                s = t
            if direct_ok and x1y3 > s:
                s = x1y3
            if s <= 0:
                continue
            rt = -INFINITY
            if p2 < x2z + tol:
                rt = x1zx2
            if p2 > x2z - tol and p2 < x2zx1 + tol and x1x2z - p2 > rt:
                rt = x1x2z - p2
            if p2 > x2zx1 - tol and x1z > rt:
                rt = x1z
            if s - rt > 0:
                out[i] = s - rt
    return out_arr


def cond_typicality(a_words, b_words, g_fixed, t_fixed, long n_gf, long n_tf, cond):
    cdef long[:, ::1] aw = np.ascontiguousarray(a_words, dtype=np.int64)
    cdef long[:, ::1] bw = np.ascontiguousarray(b_words, dtype=np.int64)
    cdef long[::1] gf = np.ascontiguousarray(g_fixed, dtype=np.int64)
    cdef long[::1] tf = np.ascontiguousarray(t_fixed, dtype=np.int64)
    cdef double[:, ::1] P = np.ascontiguousarray(cond, dtype=np.float64)
    cdef Py_ssize_t ma = aw.shape[0], n = aw.shape[1], mb = bw.shape[0]
    cdef Py_ssize_t gt = P.shape[0], tt = P.shape[1]
    out_arr = np.empty((ma, mb), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] rowsum = np.ascontiguousarray(np.asarray(cond, dtype=np.float64).sum(axis=1))
    cdef int *cnt = <int *> malloc(gt * tt * sizeof(int))
    cdef int *ng = <int *> malloc(gt * sizeof(int))
    cdef Py_ssize_t i, k, t, g, c
    cdef double dev, d, f
    if cnt == NULL or ng == NULL:
        free(cnt)
        free(ng)
        raise MemoryError()
    try:
        with nogil:
            for i in range(ma):
                for k in range(mb):
                    for c in range(gt * tt):
                        cnt[c] = 0
                    for g in range(gt):
                        ng[g] = 0
                    for t in range(n):
                        g = aw[i, t] * n_gf + gf[t]
                        cnt[g * tt + bw[k, t] * n_tf + tf[t]] += 1
                        ng[g] += 1
                    dev = 0.0
                    for g in range(gt):
                        if ng[g] == 0:
                            continue
                        if rowsum[g] <= 0.0:
                            dev = INFINITY
                            break
                        for c in range(tt):
                            if cnt[g * tt + c] > 0 and P[g, c] <= 0.0:
                                dev = INFINITY
                                break
                            f = <double> cnt[g * tt + c] / ng[g]
                            d = fabs(f - P[g, c])
                            if d > dev:
                                dev = d
                        if dev == INFINITY:
                            break
                    out[i, k] = dev
    finally:
        free(cnt)
        free(ng)
    return out_arr
