# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled twin of the NumPy kernels.

Mirrors :mod:`dbpsense._kernels._pure` operation for operation: identical
edge iteration order, the same normalized mixing weights, and strict
first-minimum tie-breaking, so both backends agree to floating-point
noise and pick the same sensors whenever scores are distinct.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, fabs, pow

cnp.import_array()


cdef inline double _decay_one(double c, double tt, double kb, double n) noexcept nogil:
    if kb == 0.0:
        return c
    if fabs(n - 1.0) <= 1e-4:
        return c * exp(-kb * tt)
    if c <= 0.0:
        return 0.0
    cdef double one_minus = 1.0 - n
    cdef double base = pow(c, one_minus) + (n - 1.0) * kb * tt
    if base > 0.0:
        return pow(base, 1.0 / one_minus)
    return 0.0


def arrival_and_concentration(cnp.int64_t[::1] order,
                              cnp.int64_t[::1] indptr,
                              cnp.int64_t[::1] up_node,
                              double[::1] up_q,
                              double[::1] up_tt,
                              cnp.uint8_t[:, ::1] injections,
                              double c0, double kb, double n):
    cdef Py_ssize_t n_scen = injections.shape[0]
    cdef Py_ssize_t n_nodes = injections.shape[1]

    arrival_arr = np.full((n_scen, n_nodes), np.inf)
    conc_arr = np.zeros((n_scen, n_nodes))
    cdef double[:, ::1] arrival = arrival_arr
    cdef double[:, ::1] conc = conc_arr

    cdef Py_ssize_t oi, s, v, u
    cdef cnp.int64_t e, lo, hi
    cdef double qsum, amin, csum, a

    with nogil:
        for oi in range(order.shape[0]):
            v = order[oi]
            lo = indptr[v]
            hi = indptr[v + 1]
            if hi > lo:
                qsum = 0.0
                for e in range(lo, hi):
                    qsum += up_q[e]
                for s in range(n_scen):
                    amin = INFINITY
                    csum = 0.0
                    for e in range(lo, hi):
                        u = up_node[e]
                        a = arrival[s, u] + up_tt[e]
                        if a < amin:
                            amin = a
                        csum += _decay_one(conc[s, u], up_tt[e], kb, n) \
                            * (up_q[e] / qsum)
                    arrival[s, v] = amin
                    conc[s, v] = csum
            for s in range(n_scen):
                if injections[s, v]:
                    arrival[s, v] = 0.0
                    conc[s, v] = c0
    return arrival_arr, conc_arr


def greedy_expected_time(double[:, ::1] times, Py_ssize_t k):
    cdef Py_ssize_t n_scen = times.shape[0]
    cdef Py_ssize_t n_cand = times.shape[1]

    selection_arr = np.empty(k, dtype=np.int64)
    values_arr = np.empty(k)
    best_arr = np.full(n_scen, np.inf)
    cdef cnp.int64_t[::1] selection = selection_arr
    cdef double[::1] values = values_arr
    cdef double[::1] best = best_arr
    taken_arr = np.zeros(n_cand, dtype=np.uint8)
    cdef cnp.uint8_t[::1] taken = taken_arr

    cdef Py_ssize_t i, s, c, best_c
    cdef double acc, score, best_score, t

    with nogil:
        for i in range(k):
            best_score = INFINITY
            best_c = -1
            for c in range(n_cand):
                if taken[c]:
                    continue
                acc = 0.0
                for s in range(n_scen):
                    t = times[s, c]
                    if best[s] < t:
                        t = best[s]
                    acc += t
                score = acc / n_scen
                if score < best_score:
                    best_score = score
                    best_c = c
            selection[i] = best_c
            values[i] = best_score
            taken[best_c] = 1
            for s in range(n_scen):
                t = times[s, best_c]
                if t < best[s]:
                    best[s] = t
    return selection_arr, values_arr
