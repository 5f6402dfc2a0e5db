# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the inner loops of valsize.

Each function mirrors one in ``valsize._fallback`` and must agree with it to
floating-point round-off. Sums use Neumaier compensation so the result does
not depend on how a caller chunks its input.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()


cdef inline void _neumaier(double *acc, double *comp, double x) noexcept nogil:
    cdef double t = acc[0] + x
    if fabs(acc[0]) >= fabs(x):
        comp[0] += (acc[0] - t) + x
    else:
        comp[0] += (x - t) + acc[0]
    acc[0] = t


def confusion_sums(const double[::1] scores, const double[::1] weights, double threshold):
    cdef Py_ssize_t i, n = scores.shape[0]
    cdef double tp = 0.0, fp = 0.0, fn = 0.0, tn = 0.0
    cdef double ctp = 0.0, cfp = 0.0, cfn = 0.0, ctn = 0.0
    cdef double w
    if weights.shape[0] != n:
        raise ValueError("scores and weights differ in length")
    with nogil:
        for i in range(n):
            w = weights[i]
            if scores[i] > threshold:
                _neumaier(&tp, &ctp, w)
                _neumaier(&fp, &cfp, 1.0 - w)
            else:
                _neumaier(&fn, &cfn, w)
                _neumaier(&tn, &ctn, 1.0 - w)
    return tp + ctp, fp + cfp, fn + cfn, tn + ctn


def fisher_sums(const double[::1] lp, double alpha, double beta):
    cdef Py_ssize_t i, n = lp.shape[0]
    cdef double sa = 0.0, sb = 0.0, sc = 0.0
    cdef double ca = 0.0, cb = 0.0, cc = 0.0
    cdef double z, e, a, x
    with nogil:
        for i in range(n):
            x = lp[i]
            z = alpha + beta * x
            # exp(-|z|) keeps the logistic density finite for large |z|
            e = exp(-fabs(z))
            a = e / ((1.0 + e) * (1.0 + e))
            _neumaier(&sa, &ca, a)
            _neumaier(&sb, &cb, x * a)
            _neumaier(&sc, &cc, x * x * a)
    return sa + ca, sb + cb, sc + cc


def loo_km_survival(const double[::1] times, const cnp.int64_t[::1] events, double horizon):
    """Leave-one-out product-limit survival at ``horizon``.

    ``times`` must be sorted ascending. Returns ``(s_full, s_loo)`` where
    ``s_loo[i]`` is the estimate with record ``i`` removed.
    """
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t i, j, start, m = 0, k
    cdef double t
    cdef cnp.int64_t d

    # pass 1: distinct event times up to the horizon
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dj_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nj_arr = np.zeros(n, dtype=np.int64)
    # number of event groups with time <= times[i]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kk_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] dj = dj_arr
    cdef cnp.int64_t[::1] nj = nj_arr
    cdef cnp.int64_t[::1] kk = kk_arr

    i = 0
    while i < n:
        start = i
        t = times[i]
        d = 0
        while i < n and times[i] == t:
            d += events[i]
            i += 1
        if t <= horizon and d > 0:
            dj[m] = d
            nj[m] = n - start
            m += 1
        for j in range(start, i):
            kk[j] = m

    cdef cnp.ndarray[cnp.float64_t, ndim=1] gpre_arr = np.ones(m + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fsuf_arr = np.ones(m + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h_arr = np.ones(m + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] gpre = gpre_arr
    cdef double[::1] fsuf = fsuf_arr
    cdef double[::1] h = h_arr
    cdef double[::1] out = out_arr
    cdef double g

    for j in range(m):
        if nj[j] > 1:
            g = 1.0 - (<double>dj[j]) / (<double>(nj[j] - 1))
            h[j] = 1.0 - (<double>(dj[j] - 1)) / (<double>(nj[j] - 1))
        else:
            g = 0.0
            h[j] = 1.0
        gpre[j + 1] = gpre[j] * g
    for j in range(m - 1, -1, -1):
        fsuf[j] = fsuf[j + 1] * (1.0 - (<double>dj[j]) / (<double>nj[j]))

    for i in range(n):
        k = kk[i]
        if events[i] == 1 and times[i] <= horizon:
            out[i] = gpre[k - 1] * h[k - 1] * fsuf[k]
        else:
            out[i] = gpre[k] * fsuf[k]
    return fsuf[0], out_arr
