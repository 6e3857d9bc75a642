# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: IIR cascade, entropy counters, Higuchi, DFA.

Mirrors the signatures in ``_kernels_py``; parity between the two backends is
asserted by the test suite.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log, sqrt

cnp.import_array()

BACKEND = "compiled"


def sosfilt(const double[:, ::1] sos, const double[:, ::1] x, double[:, :, ::1] zi):
    """Causal SOS cascade over the last axis (direct form II transposed).

    sos: (S, 6), x: (C, T), zi: (S, C, 2) updated in place. Returns (C, T).
    """
    cdef Py_ssize_t n_sec = sos.shape[0]
    cdef Py_ssize_t n_ch = x.shape[0]
    cdef Py_ssize_t n_t = x.shape[1]
    out_arr = np.empty((n_ch, n_t), dtype=np.float64)
    cdef double[:, ::1] y = out_arr
    cdef Py_ssize_t c, t, s
    cdef double w, v, b0, b1, b2, a1, a2, z0, z1
    for c in range(n_ch):
        for t in range(n_t):
            y[c, t] = x[c, t]
    for s in range(n_sec):
        b0 = sos[s, 0]; b1 = sos[s, 1]; b2 = sos[s, 2]
        a1 = sos[s, 4]; a2 = sos[s, 5]
        for c in range(n_ch):
            z0 = zi[s, c, 0]
            z1 = zi[s, c, 1]
            for t in range(n_t):
                w = y[c, t]
                v = b0 * w + z0
                z0 = b1 * w - a1 * v + z1
                z1 = b2 * w - a2 * v
                y[c, t] = v
            zi[s, c, 0] = z0
            zi[s, c, 1] = z1
    return out_arr


def sampen_counts(const double[::1] x, int m, double r):
    """Pair counts (b, a) for sample entropy; Chebyshev distance <= r."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_t = n - m
    cdef long long b = 0, a = 0
    cdef Py_ssize_t i, j, k
    cdef double d, diff
    if n_t < 2:
        return 0, 0
    for i in range(n_t - 1):
        for j in range(i + 1, n_t):
            d = 0.0
            for k in range(m):
                diff = fabs(x[i + k] - x[j + k])
                if diff > d:
                    d = diff
                    if d > r:
                        break
            if d <= r:
                b += 1
                if fabs(x[i + m] - x[j + m]) <= r:
                    a += 1
    return b, a


def apen_phi(const double[::1] x, int m, double r):
    """Phi(m) for approximate entropy (self-matches included)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_t = n - m + 1
    cdef Py_ssize_t i, j, k
    cdef double d, diff, acc = 0.0
    cdef long long cnt
    for i in range(n_t):
        cnt = 0
        for j in range(n_t):
            d = 0.0
            for k in range(m):
                diff = fabs(x[i + k] - x[j + k])
                if diff > d:
                    d = diff
                    if d > r:
                        break
            if d <= r:
                cnt += 1
        acc += log(cnt / <double>n_t)
    return acc / n_t


def higuchi_lengths(const double[::1] x, int k_max):
    """Mean normalized curve length L(k) for k = 1 .. k_max."""
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(k_max, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, m, i, n_seg
    cdef double acc, seg_sum
    for k in range(1, k_max + 1):
        acc = 0.0
        for m in range(k):
            n_seg = (n - 1 - m) // k
            if n_seg < 1:
                continue
            seg_sum = 0.0
            for i in range(1, n_seg + 1):
                seg_sum += fabs(x[m + i * k] - x[m + (i - 1) * k])
            acc += seg_sum * (n - 1) / (n_seg * k) / k
        out[k - 1] = acc / k
    return out_arr


def dfa_fluctuations(const double[::1] profile, scales):
    """RMS fluctuation of the linearly detrended profile per box size."""
    cdef Py_ssize_t n = profile.shape[0]
    cdef Py_ssize_t n_scales = len(scales)
    out_arr = np.empty(n_scales, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long[::1] sc = np.asarray(scales, dtype=np.int64).astype(np.int_)
    cdef Py_ssize_t si, s, n_boxes, b, t
    cdef double st, stt, sy, sty, denom, slope, intercept, resid, acc
    cdef Py_ssize_t base
    for si in range(n_scales):
        s = sc[si]
        n_boxes = n // s
        st = (s - 1) * s / 2.0
        stt = (s - 1) * s * (2 * s - 1) / 6.0
        denom = s * stt - st * st
        acc = 0.0
        for b in range(n_boxes):
            base = b * s
            sy = 0.0
            sty = 0.0
            for t in range(s):
                sy += profile[base + t]
                sty += t * profile[base + t]
            slope = (s * sty - st * sy) / denom
            intercept = (sy - slope * st) / s
            for t in range(s):
                resid = profile[base + t] - (slope * t + intercept)
                acc += resid * resid
        out[si] = sqrt(acc / (n_boxes * s))
    return out_arr
