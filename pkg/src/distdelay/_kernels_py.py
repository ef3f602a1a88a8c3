"""Pure-Python versions of the kernels in ``_kernels.pyx``.

Same signatures and results; used when the extension is not built.
"""

from bisect import bisect_left

import numpy as np


def lindley(increments, q0=0.0):
    out = np.empty(len(increments), dtype=np.float64)
    cur = float(q0)
    for i, x in enumerate(np.asarray(increments, dtype=np.float64).tolist()):
        cur += x
        if cur < 0.0:
            cur = 0.0
        out[i] = cur
    return out


def tail_counts(q, thresholds):
    thr = np.asarray(thresholds, dtype=np.float64).tolist()
    m = len(thr)
    hist = [0] * (m + 1)
    for v in np.asarray(q, dtype=np.float64).tolist():
        hist[bisect_left(thr, v)] += 1
    out = np.empty(m, dtype=np.int64)
    acc = 0
    for i in range(m, 0, -1):
        acc += hist[i]
        out[i - 1] = acc
    return out


def hyp1f1_series(a, b, z, tol, max_terms):
    s = 1.0
    comp = 0.0
    term = 1.0
    for k in range(max_terms):
        term *= (a + k) * z / ((b + k) * (k + 1.0))
        if term == 0.0:
            return s, k + 1, True
        y = term - comp
        t = s + y
        comp = (t - s) - y
        s = t
        if abs(term) <= tol * abs(s) and abs((a + k + 1.0) * z) < abs((b + k + 1.0) * (k + 2.0)):
            return s, k + 1, True
    return s, max_terms, False
