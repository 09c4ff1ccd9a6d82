# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels: compensated reductions, chain sampling and
row-distance scans. Mirrors semsmooth._pykern exactly."""

from libc.math cimport fabs, log, sqrt, INFINITY

import numpy as np

BACKEND = "c"


cdef inline double _neu_add(double s, double x, double* comp) noexcept nogil:
    # one Neumaier step: returns the new running sum, updates *comp
    cdef double t = s + x
    if fabs(s) >= fabs(x):
        comp[0] += (s - t) + x
    else:
        comp[0] += (x - t) + s
    return t


cpdef double neumaier_sum(const double[::1] x):
    cdef double s = 0.0, c = 0.0
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        s = _neu_add(s, x[i], &c)
    return s + c


cpdef double sum_neg_log(const double[::1] p):
    cdef double s = 0.0, c = 0.0
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        if p[i] <= 0.0:
            return INFINITY
        s = _neu_add(s, log(p[i]), &c)
    return -(s + c)


cpdef double kl_div(const double[::1] p, const double[::1] q):
    cdef double s = 0.0, c = 0.0
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        if p[i] > 0.0:
            if q[i] <= 0.0:
                return INFINITY
            s = _neu_add(s, p[i] * log(p[i] / q[i]), &c)
    return s + c


cpdef double entropy(const double[::1] p):
    cdef double s = 0.0, c = 0.0
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        if p[i] > 0.0:
            s = _neu_add(s, p[i] * log(p[i]), &c)
    return -(s + c)


cpdef double sum_pairs_entropy(const long long[::1] counts,
                               const long long[::1] ctx_tot):
    cdef double s = 0.0, c = 0.0
    cdef Py_ssize_t i
    for i in range(counts.shape[0]):
        s = _neu_add(s, counts[i] * log((<double> counts[i]) / ctx_tot[i]), &c)
    return s + c


cpdef double sum_pairs_kl(const long long[::1] counts,
                          const long long[::1] ctx_tot,
                          const double[::1] q):
    cdef double s = 0.0, c = 0.0
    cdef Py_ssize_t i
    for i in range(counts.shape[0]):
        if q[i] <= 0.0:
            return INFINITY
        s = _neu_add(s, counts[i] * (log((<double> counts[i]) / ctx_tot[i]) - log(q[i])), &c)
    return s + c


cpdef markov_sample(const double[:, ::1] cum_rows, long long start,
                    const double[::1] uniforms):
    cdef Py_ssize_t n = uniforms.shape[0]
    cdef Py_ssize_t last = cum_rows.shape[1] - 1
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    cdef long long s = start
    cdef Py_ssize_t i, lo, hi, mid
    cdef double u
    for i in range(n):
        u = uniforms[i]
        lo = 0
        hi = last
        while lo < hi:
            mid = (lo + hi) >> 1
            if cum_rows[s, mid] > u:
                hi = mid
            else:
                lo = mid + 1
        s = lo
        o[i] = s
    return out


cpdef dist_to_rows(const double[::1] query, const double[:, ::1] rows, int norm):
    cdef Py_ssize_t nr = rows.shape[0], nc = rows.shape[1]
    out = np.empty(nr, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double acc, d
    for i in range(nr):
        acc = 0.0
        if norm == 1:
            for j in range(nc):
                acc += fabs(rows[i, j] - query[j])
            o[i] = acc
        else:
            for j in range(nc):
                d = rows[i, j] - query[j]
                acc += d * d
            o[i] = sqrt(acc)
    return out
