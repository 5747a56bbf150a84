# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _reflect(Py_ssize_t j, Py_ssize_t n) nogil:
    if j < 0:
        return -j - 1
    if j >= n:
        return 2 * n - j - 1
    return j


def local_peaks(const double[::1] x, Py_ssize_t distance, double min_height):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i = 1, ahead, count = 0, k, j, p, q
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cand = np.empty(max(n // 2, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] cv = cand

    while i < n - 1:
        if x[i - 1] < x[i]:
            ahead = i + 1
            while ahead < n - 1 and x[ahead] == x[i]:
                ahead += 1
            if x[ahead] < x[i]:
                p = (i + ahead - 1) // 2
                if x[p] >= min_height:
                    cv[count] = p
                    count += 1
                i = ahead
                continue
        i += 1

    cand = cand[:count]
    if distance <= 1 or count < 2:
        return cand.copy()

    cv = cand
    heights = np.asarray(x)[cand]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.lexsort(
        (np.arange(count, dtype=np.int64), -heights)).astype(np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] keep = np.ones(count, dtype=np.uint8)
    cdef cnp.int64_t[::1] ov = order
    cdef cnp.uint8_t[::1] kv = keep

    for k in range(count):
        j = ov[k]
        if kv[j] == 0:
            continue
        q = j - 1
        while q >= 0 and cv[j] - cv[q] < distance:
            kv[q] = 0
            q -= 1
        q = j + 1
        while q < count and cv[q] - cv[j] < distance:
            kv[q] = 0
            q += 1
    return cand[keep.astype(bool)]


def reflect_convolve(const double[::1] x, const double[::1] taps):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = taps.shape[0]
    cdef Py_ssize_t h = m // 2
    cdef Py_ssize_t i, k
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(m):
                acc = acc + taps[k] * x[_reflect(i + h - k, n)]
            ov[i] = acc
    return out


def bin_accumulate(const double[::1] u, const double[::1] err, Py_ssize_t n_bins):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, b
    counts = np.zeros(n_bins, dtype=np.int64)
    sum_u = np.zeros(n_bins, dtype=np.float64)
    sum_e = np.zeros(n_bins, dtype=np.float64)
    cdef cnp.int64_t[::1] cv = counts
    cdef double[::1] su = sum_u
    cdef double[::1] se = sum_e
    with nogil:
        for i in range(n):
            b = <Py_ssize_t>(u[i] * n_bins)
            if b >= n_bins:
                b = n_bins - 1
            cv[b] += 1
            su[b] += u[i]
            se[b] += err[i]
    return counts, sum_u, sum_e


def overlap_add(const double[:, ::1] windows, const cnp.int64_t[::1] starts, Py_ssize_t n):
    cdef Py_ssize_t k = windows.shape[0]
    cdef Py_ssize_t w = windows.shape[1]
    cdef Py_ssize_t i, j, s
    acc = np.zeros(n, dtype=np.float64)
    weight = np.zeros(n, dtype=np.float64)
    cdef double[::1] av = acc
    cdef double[::1] wv = weight
    with nogil:
        for i in range(k):
            s = starts[i]
            for j in range(w):
                av[s + j] += windows[i, j]
                wv[s + j] += 1.0
    return acc, weight
