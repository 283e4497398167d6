# cython: language_level=3
"""Compiled hot kernels: eps-neighborhood scans and Kmeans assignment.

All distance arithmetic is single precision with sequential accumulation
over features, matching the numpy fallback bit for bit.  Both kernels
release the GIL so the threaded backend gets real parallelism.
"""

cimport numpy as cnp


def region_scan(const float[:, ::1] data, Py_ssize_t q, float eps2,
                Py_ssize_t lo, Py_ssize_t hi, cnp.int32_t[::1] out):
    """Collect indices j in [lo, hi), j != q, with squared distance to q <= eps2.

    Indices are written to ``out`` in ascending order; returns the count.
    """
    cdef Py_ssize_t d = data.shape[1]
    cdef Py_ssize_t j, f, cnt = 0
    cdef float acc, diff
    with nogil:
        for j in range(lo, hi):
            if j == q:
                continue
            acc = 0.0
            for f in range(d):
                diff = data[j, f] - data[q, f]
                acc = acc + diff * diff
            if acc <= eps2:
                out[cnt] = <cnp.int32_t>j
                cnt += 1
    return cnt


def region_scan_multi(const float[:, ::1] data, const cnp.int32_t[::1] qs, float eps2,
                      Py_ssize_t lo, Py_ssize_t hi, cnp.int32_t[:, ::1] out,
                      cnp.int32_t[::1] counts):
    """Run region_scan for every query in qs; row b of out holds query b's hits."""
    cdef Py_ssize_t d = data.shape[1]
    cdef Py_ssize_t nq = qs.shape[0]
    cdef Py_ssize_t b, j, f, q, cnt
    cdef float acc, diff
    with nogil:
        for b in range(nq):
            q = qs[b]
            cnt = 0
            for j in range(lo, hi):
                if j == q:
                    continue
                acc = 0.0
                for f in range(d):
                    diff = data[j, f] - data[q, f]
                    acc = acc + diff * diff
                if acc <= eps2:
                    out[b, cnt] = <cnp.int32_t>j
                    cnt += 1
            counts[b] = <cnp.int32_t>cnt


def kmeans_assign(const float[:, ::1] data, const float[:, ::1] centers,
                  Py_ssize_t lo, Py_ssize_t hi, cnp.uint16_t[::1] labels):
    """Assign each point in [lo, hi) to its nearest center (ties: lowest index)."""
    cdef Py_ssize_t d = data.shape[1]
    cdef Py_ssize_t k = centers.shape[0]
    cdef Py_ssize_t i, j, f, bestj
    cdef float acc, diff, best
    with nogil:
        for i in range(lo, hi):
            bestj = 0
            best = 0.0
            for f in range(d):
                diff = data[i, f] - centers[0, f]
                best = best + diff * diff
            for j in range(1, k):
                acc = 0.0
                for f in range(d):
                    diff = data[i, f] - centers[j, f]
                    acc = acc + diff * diff
                if acc < best:
                    best = acc
                    bestj = j
            labels[i] = <cnp.uint16_t>bestj
