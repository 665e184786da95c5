# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled integer kernels for ranking codes.

Mirrors _pure.py; both backends must return bit-identical arrays.
"""

from libc.stdint cimport int64_t

import numpy as np


def s_code(items, sigma_rank):
    """Discrepancy code of the ranked prefix `items` against a center."""
    cdef const int64_t[::1] it = np.ascontiguousarray(items, dtype=np.int64)
    cdef const int64_t[::1] sr = np.ascontiguousarray(sigma_rank, dtype=np.int64)
    cdef Py_ssize_t t = it.shape[0]
    out_arr = np.empty(t, dtype=np.int64)
    p_arr = np.empty(t, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef int64_t[::1] p = p_arr
    cdef Py_ssize_t j, k
    cdef int64_t pj, c
    for j in range(t):
        p[j] = sr[it[j]]
    for j in range(t):
        pj = p[j]
        c = 0
        for k in range(j):
            if p[k] < pj:
                c += 1
        out[j] = pj - c
    return out_arr


def s_codes(items, sigma_ranks):
    """s_code against several centers at once; sigma_ranks is (C, n)."""
    cdef const int64_t[::1] it = np.ascontiguousarray(items, dtype=np.int64)
    cdef const int64_t[:, ::1] srs = np.ascontiguousarray(sigma_ranks, dtype=np.int64)
    cdef Py_ssize_t t = it.shape[0]
    cdef Py_ssize_t nc = srs.shape[0]
    out_arr = np.empty((nc, t), dtype=np.int64)
    p_arr = np.empty(t, dtype=np.int64)
    cdef int64_t[:, ::1] out = out_arr
    cdef int64_t[::1] p = p_arr
    cdef Py_ssize_t ci, j, k
    cdef int64_t pj, c
    for ci in range(nc):
        for j in range(t):
            p[j] = srs[ci, it[j]]
        for j in range(t):
            pj = p[j]
            c = 0
            for k in range(j):
                if p[k] < pj:
                    c += 1
            out[ci, j] = pj - c
    return out_arr


def build_from_code(s, sigma_order):
    """Invert s_code: rebuild the ranked items from a code and a center."""
    cdef const int64_t[::1] sv = np.ascontiguousarray(s, dtype=np.int64)
    rem_arr = np.ascontiguousarray(sigma_order, dtype=np.int64).copy()
    cdef int64_t[::1] rem = rem_arr
    cdef Py_ssize_t t = sv.shape[0]
    cdef Py_ssize_t rem_len = rem.shape[0]
    out_arr = np.empty(t, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t j, i
    cdef int64_t k
    for j in range(t):
        k = sv[j]
        if k < 0 or k >= rem_len:
            raise ValueError("code entry out of range")
        out[j] = rem[k]
        for i in range(k, rem_len - 1):
            rem[i] = rem[i + 1]
        rem_len -= 1
    return out_arr
