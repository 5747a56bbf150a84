"""Pure-Python reference versions of the compiled kernels.

Used when ``_ckernels`` is unavailable or ``PPGDTUQ_NO_EXT`` is set. Every
function here returns results identical to its compiled twin (bitwise for
index outputs, to rounding for sums whose order is preserved).
"""

import numpy as np


def _reflect(j, n):
    if j < 0:
        return -j - 1
    if j >= n:
        return 2 * n - j - 1
    return j


def local_peaks(x, distance, min_height):
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    cand = []
    i = 1
    while i < n - 1:
        if x[i - 1] < x[i]:
            ahead = i + 1
            while ahead < n - 1 and x[ahead] == x[i]:
                ahead += 1
            if x[ahead] < x[i]:
                p = (i + ahead - 1) // 2
                if x[p] >= min_height:
                    cand.append(p)
                i = ahead
                continue
        i += 1
    cand = np.asarray(cand, dtype=np.int64)
    count = cand.shape[0]
    if distance <= 1 or count < 2:
        return cand

    order = np.lexsort((np.arange(count), -x[cand]))
    keep = np.ones(count, dtype=bool)
    for j in order:
        if not keep[j]:
            continue
        q = j - 1
        while q >= 0 and cand[j] - cand[q] < distance:
            keep[q] = False
            q -= 1
        q = j + 1
        while q < count and cand[q] - cand[j] < distance:
            keep[q] = False
            q += 1
    return cand[keep]


def reflect_convolve(x, taps):
    x = np.ascontiguousarray(x, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    n, m = x.shape[0], taps.shape[0]
    h = m // 2
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for k in range(m):
            acc = acc + taps[k] * x[_reflect(i + h - k, n)]
        out[i] = acc
    return out


def bin_accumulate(u, err, n_bins):
    u = np.ascontiguousarray(u, dtype=np.float64)
    err = np.ascontiguousarray(err, dtype=np.float64)
    counts = np.zeros(n_bins, dtype=np.int64)
    sum_u = np.zeros(n_bins, dtype=np.float64)
    sum_e = np.zeros(n_bins, dtype=np.float64)
    for ui, ei in zip(u.tolist(), err.tolist()):
        b = min(int(ui * n_bins), n_bins - 1)
        counts[b] += 1
        sum_u[b] += ui
        sum_e[b] += ei
    return counts, sum_u, sum_e


def overlap_add(windows, starts, n):
    windows = np.ascontiguousarray(windows, dtype=np.float64)
    acc = np.zeros(n, dtype=np.float64)
    weight = np.zeros(n, dtype=np.float64)
    w = windows.shape[1]
    for row, s in zip(windows, np.asarray(starts, dtype=np.int64).tolist()):
        acc[s:s + w] += row
        weight[s:s + w] += 1.0
    return acc, weight
