"""Compiled hot loops: Lindley recursion, tail counting, 1F1 series."""

import numpy as np

from libc.math cimport fabs


def lindley(const double[::1] increments, double q0=0.0):
    """Backlog path ``q[t] = max(0, q[t-1] + increments[t])`` with ``q[-1] = q0``."""
    cdef Py_ssize_t n = increments.shape[0]
    cdef Py_ssize_t i
    cdef double cur = q0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] q = out
    for i in range(n):
        cur = cur + increments[i]
        if cur < 0.0:
            cur = 0.0
        q[i] = cur
    return out


def tail_counts(const double[::1] q, const double[::1] thresholds):
    """Number of entries of ``q`` strictly above each (ascending) threshold."""
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t m = thresholds.shape[0]
    cdef Py_ssize_t i, lo, hi, mid
    cdef double v
    hist_arr = np.zeros(m + 1, dtype=np.int64)
    cdef long long[::1] hist = hist_arr
    for i in range(n):
        v = q[i]
        # number of thresholds strictly below v
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) >> 1
            if thresholds[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        hist[lo] += 1
    out = np.empty(m, dtype=np.int64)
    cdef long long[::1] counts = out
    cdef long long acc = 0
    for i in range(m, 0, -1):
        acc += hist[i]
        counts[i - 1] = acc
    return out


def hyp1f1_series(double a, double b, double z, double tol, long max_terms):
    """Kahan-compensated power series for 1F1(a; b; z).

    Returns ``(value, terms_used, converged)``.
    """
    cdef double s = 1.0
    cdef double comp = 0.0
    cdef double term = 1.0
    cdef double y, t, ratio
    cdef long k
    for k in range(max_terms):
        ratio = (a + k) * z / ((b + k) * (k + 1.0))
        term = term * ratio
        if term == 0.0:
            return s, k + 1, True
        y = term - comp
        t = s + y
        comp = (t - s) - y
        s = t
        if fabs(term) <= tol * fabs(s) and fabs((a + k + 1.0) * z) < fabs((b + k + 1.0) * (k + 2.0)):
            return s, k + 1, True
    return s, max_terms, False
