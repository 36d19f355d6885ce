# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pair-sweep kernels.

Same contracts as :mod:`asynchy._kernels_py`; scalar accumulation uses
Neumaier compensation instead of math.fsum.
"""

import numpy as np

from libc.math cimport fabs, pow

BACKEND_NAME = "cython"


cdef inline double _ipow(double x, long k) noexcept nogil:
    cdef double result = 1.0
    cdef double base = x
    while k:
        if k & 1:
            result *= base
        k >>= 1
        if k:
            base *= base
    return result


def signed_product_pair_sum(
    double[::1] d1, double[::1] d2, long[::1] jlo, long[::1] jhi, long p1, long p2
):
    cdef Py_ssize_t i, n = jlo.shape[0]
    cdef long j
    cdef double s = 0.0, comp = 0.0, f1, term, t
    with nogil:
        for i in range(n):
            f1 = _ipow(d1[i], p1)
            if f1 == 0.0:
                continue
            for j in range(jlo[i], jhi[i] + 1):
                term = f1 * _ipow(d2[j - 1], p2)
                t = s + term
                if fabs(s) >= fabs(term):
                    comp += (s - t) + term
                else:
                    comp += (term - t) + s
                s = t
    return s + comp


def abs_product_pair_sum(
    double[::1] d1, double[::1] d2, long[::1] jlo, long[::1] jhi, double p1, double p2
):
    cdef Py_ssize_t i, n = jlo.shape[0]
    cdef long j
    cdef double s = 0.0, comp = 0.0, f1, term, t
    with nogil:
        for i in range(n):
            f1 = pow(fabs(d1[i]), p1)
            if f1 == 0.0:
                continue
            for j in range(jlo[i], jhi[i] + 1):
                term = f1 * pow(fabs(d2[j - 1]), p2)
                t = s + term
                if fabs(s) >= fabs(term):
                    comp += (s - t) + term
                else:
                    comp += (term - t) + s
                s = t
    return s + comp


def pair_stat_terms(
    double[::1] times1,
    double[::1] times2,
    long[::1] jlo,
    long[::1] jhi,
    double ea,
    double eb,
    double ec,
    bint use_setdiff,
):
    cdef Py_ssize_t i, n = jlo.shape[0]
    cdef Py_ssize_t total = 0, k = 0
    cdef long j
    for i in range(n):
        if jhi[i] >= jlo[i]:
            total += jhi[i] - jlo[i] + 1
    bp_arr = np.empty(total, dtype=np.float64)
    term_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] bp = bp_arr
    cdef double[::1] terms = term_arr
    cdef double l1, r1, l2, r2, ov, side1, side2
    with nogil:
        for i in range(n):
            l1 = times1[i]
            r1 = times1[i + 1]
            for j in range(jlo[i], jhi[i] + 1):
                l2 = times2[j - 1]
                r2 = times2[j]
                ov = (r1 if r1 < r2 else r2) - (l1 if l1 > l2 else l2)
                side1 = r1 - l1
                side2 = r2 - l2
                if use_setdiff:
                    side1 = side1 - ov
                    if side1 < 0.0:
                        side1 = 0.0
                    side2 = side2 - ov
                    if side2 < 0.0:
                        side2 = 0.0
                terms[k] = pow(side1, ea) * pow(side2, eb) * pow(ov, ec)
                bp[k] = r1 if r1 > r2 else r2
                k += 1
    return bp_arr, term_arr


def cumulative_sum(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double s = 0.0, comp = 0.0, term, t
    with nogil:
        for i in range(n):
            term = x[i]
            t = s + term
            if fabs(s) >= fabs(term):
                comp += (s - t) + term
            else:
                comp += (term - t) + s
            s = t
            out[i] = s + comp
    return out_arr
