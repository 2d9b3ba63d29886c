# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; must match ``_pykernels`` bit for bit."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from scipy.special.cython_special cimport ndtri

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double ULP52 = 2.220446049250313e-16  # 2**-52


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, int64_t i, int64_t j) noexcept nogil:
    cdef uint64_t counter = ((<uint64_t>i) << 32) | (<uint64_t>j)
    cdef uint64_t bits = mix64(key + (counter + 1) * GOLDEN)
    return (<double>(bits >> 12) + 0.5) * ULP52


cdef inline double transform(double u, int code, double a, double b) noexcept nogil:
    if code == 0:
        return a + b * ndtri(u)
    if code == 1:
        return a + b * u
    return a


cdef inline double entry(uint64_t key, int64_t i, int64_t j,
                         int off_code, double off_a, double off_b,
                         int diag_code, double diag_a, double diag_b) noexcept nogil:
    cdef double u = uniform(key, i, j)
    if i == j:
        return transform(u, diag_code, diag_a, diag_b)
    return transform(u, off_code, off_a, off_b)


def entries(key, rows, cols, int off_code, double off_a, double off_b,
            int diag_code, double diag_a, double diag_b):
    r, c = np.broadcast_arrays(np.asarray(rows, dtype=np.int64),
                               np.asarray(cols, dtype=np.int64))
    shape = r.shape
    cdef const int64_t[::1] rv = np.ascontiguousarray(r).ravel()
    cdef const int64_t[::1] cv = np.ascontiguousarray(c).ravel()
    cdef Py_ssize_t m = rv.shape[0], t
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef uint64_t k = <uint64_t>key
    with nogil:
        for t in range(m):
            ov[t] = entry(k, rv[t], cv[t], off_code, off_a, off_b,
                          diag_code, diag_a, diag_b)
    return out.reshape(shape)


def fill_rows(key, int64_t n, int64_t r0, int64_t r1, int off_code, double off_a,
              double off_b, int diag_code, double diag_a, double diag_b):
    out = np.empty((r1 - r0, n), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef uint64_t k = <uint64_t>key
    cdef int64_t i, j
    with nogil:
        for i in range(r0, r1):
            for j in range(n):
                ov[i - r0, j] = entry(k, i, j, off_code, off_a, off_b,
                                      diag_code, diag_a, diag_b)
    return out


def offdiag_column_sums(key, int64_t n, int off_code, double off_a, double off_b):
    sums = np.zeros(n, dtype=np.float64)
    cdef double[::1] sv = sums
    cdef uint64_t k = <uint64_t>key
    cdef int64_t i, j
    with nogil:
        for i in range(n):
            for j in range(n):
                if i != j:
                    sv[j] += transform(uniform(k, i, j), off_code, off_a, off_b)
    return sums


def evolve(a_arr, b_arr, vab_arr, vba_arr, diag_arr, u_arr, partner_arr):
    cdef const int64_t[::1] a = np.ascontiguousarray(a_arr, dtype=np.int64)
    cdef const int64_t[::1] b = np.ascontiguousarray(b_arr, dtype=np.int64)
    cdef const double[::1] vab = np.ascontiguousarray(vab_arr, dtype=np.float64)
    cdef const double[::1] vba = np.ascontiguousarray(vba_arr, dtype=np.float64)
    cdef const double[::1] diag = np.ascontiguousarray(diag_arr, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef int64_t[::1] partner = partner_arr
    cdef Py_ssize_t m = a.shape[0], n = u.shape[0], i
    cdef int64_t k, l, old, side
    formed_arr = np.zeros(m, dtype=bool)
    cdef cnp.npy_bool[::1] formed = formed_arr
    in_new_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] in_new = in_new_arr
    with nogil:
        # decisions read step-t utilities only
        for i in range(m):
            if vab[i] > u[a[i]] and vba[i] > u[b[i]]:
                formed[i] = 1
                in_new[a[i]] = 1
                in_new[b[i]] = 1
        for i in range(m):
            if formed[i]:
                for side in range(2):
                    k = a[i] if side == 0 else b[i]
                    old = partner[k]
                    if old >= 0 and not in_new[old]:
                        partner[old] = -1
                        u[old] = diag[old]
        for i in range(m):
            if formed[i]:
                k = a[i]
                l = b[i]
                partner[k] = l
                partner[l] = k
                u[k] = vab[i]
                u[l] = vba[i]
    return formed_arr


def gale_shapley(order_arr, rank_arr):
    cdef const int64_t[:, ::1] order = np.ascontiguousarray(order_arr, dtype=np.int64)
    cdef const int64_t[:, ::1] rank = np.ascontiguousarray(rank_arr, dtype=np.int64)
    cdef Py_ssize_t n = order.shape[0]
    nxt_arr = np.zeros(n, dtype=np.int64)
    held_arr = np.full(n, -1, dtype=np.int64)
    free_arr = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] nxt = nxt_arr
    cdef int64_t[::1] held = held_arr
    cdef int64_t[::1] free = free_arr
    cdef Py_ssize_t top = n
    cdef int64_t p, r, q
    cdef long long proposals = 0
    with nogil:
        # stack initialised so proposer 0 proposes first, as in the fallback
        for p in range(n):
            free[p] = n - 1 - p
        while top > 0:
            top -= 1
            p = free[top]
            r = order[p, nxt[p]]
            nxt[p] += 1
            proposals += 1
            q = held[r]
            if q < 0:
                held[r] = p
            elif rank[r, p] < rank[r, q]:
                held[r] = p
                free[top] = q
                top += 1
            else:
                free[top] = p
                top += 1
    assignment = np.empty(n, dtype=np.int64)
    assignment[held_arr] = np.arange(n, dtype=np.int64)
    return assignment, int(proposals)
