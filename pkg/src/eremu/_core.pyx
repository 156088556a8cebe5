# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gaussian MMD kernel sums.

One pass over each block of pairs computes the squared distance once and
accumulates it into every bandwidth's exponential sum. Rows are processed in
parallel into per-row partial sums, which are then reduced serially in row
order, so the result does not depend on the thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport exp

cnp.import_array()


cdef inline double _sqdist(const double[:, ::1] x, Py_ssize_t i,
                           const double[:, ::1] y, Py_ssize_t j,
                           Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0, diff
    cdef Py_ssize_t k
    for k in range(d):
        diff = x[i, k] - y[j, k]
        acc += diff * diff
    return acc


cdef void _block_sums(const double[:, ::1] x, const double[:, ::1] y,
                      const double[::1] neg_inv, double[:, ::1] rows,
                      double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], p = y.shape[0], d = x.shape[1]
    cdef Py_ssize_t m = neg_inv.shape[0]
    cdef Py_ssize_t i, j, u
    cdef double sq
    for i in prange(n, schedule="static"):
        for u in range(m):
            rows[i, u] = 0.0
        for j in range(p):
            sq = _sqdist(x, i, y, j, d)
            for u in range(m):
                rows[i, u] += exp(sq * neg_inv[u])
    for u in range(m):
        out[u] = 0.0
    for i in range(n):
        for u in range(m):
            out[u] += rows[i, u]


def gaussian_mmd(a, b, bandwidths):
    """Biased MMD^2 of ``a`` vs ``b`` for each Gaussian bandwidth.

    Returns an array with one (unclamped) value per bandwidth.
    """
    cdef const double[:, ::1] xa = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] xb = np.ascontiguousarray(b, dtype=np.float64)
    bw = np.asarray(bandwidths, dtype=np.float64)
    cdef double[::1] neg_inv = np.ascontiguousarray(-1.0 / (2.0 * bw * bw))
    cdef Py_ssize_t m = neg_inv.shape[0]
    s_aa = np.empty(m)
    s_ab = np.empty(m)
    s_bb = np.empty(m)
    cdef double[::1] v_aa = s_aa, v_ab = s_ab, v_bb = s_bb
    cdef double[:, ::1] rows_a = np.empty((xa.shape[0], m))
    cdef double[:, ::1] rows_b = np.empty((xb.shape[0], m))
    with nogil:
        _block_sums(xa, xa, neg_inv, rows_a, v_aa)
        _block_sums(xa, xb, neg_inv, rows_a, v_ab)
        _block_sums(xb, xb, neg_inv, rows_b, v_bb)
    cdef double na = xa.shape[0], nb = xb.shape[0]
    return s_aa / (na * na) - 2.0 * s_ab / (na * nb) + s_bb / (nb * nb)
