# Compiled boosting hot loops; see _ref.py for the reference semantics.
# Selection contract: maximize b_j^2 * ||x_j||^2, first index wins ties.

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


cdef inline Py_ssize_t _best_learner(
    const double[:, ::1] lt,
    const double[::1] r,
    const double[::1] colsumsq,
    double* b_out,
) noexcept nogil:
    cdef Py_ssize_t k = lt.shape[0]
    cdef Py_ssize_t n = lt.shape[1]
    cdef Py_ssize_t i, j, best = 0
    cdef double s, b, score, best_score = -1.0, best_b = 0.0
    for j in range(k):
        s = 0.0
        for i in range(n):
            s += lt[j, i] * r[i]
        b = s / colsumsq[j]
        score = b * s
        if score > best_score:
            best_score = score
            best_b = b
            best = j
    b_out[0] = best_b
    return best


def scan_learners(const double[:, ::1] lt, const double[::1] u,
                  const double[::1] colsumsq):
    cdef double b = 0.0
    cdef Py_ssize_t j
    with nogil:
        j = _best_learner(lt, u, colsumsq, &b)
    return j, b


cdef inline double _half_mean_sq(const double[::1] r) noexcept nogil:
    cdef Py_ssize_t i, n = r.shape[0]
    cdef double total = 0.0
    for i in range(n):
        total += r[i] * r[i]
    return 0.5 * total / n


def squared_path(const double[:, ::1] lt, const double[::1] y, double sl,
                 Py_ssize_t m_stop, lt_oob=None, y_oob=None):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t k = lt.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] selections = np.empty(m_stop, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] increments = np.empty(m_stop, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] risk = np.empty(m_stop + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r_arr = np.array(y, dtype=np.float64, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] colsumsq_arr = np.einsum(
        "ij,ij->i", np.asarray(lt), np.asarray(lt)
    )

    cdef double[::1] r = r_arr
    cdef double[::1] colsumsq = colsumsq_arr
    cdef long long[::1] sel = selections
    cdef double[::1] inc = increments
    cdef double[::1] risk_v = risk

    cdef bint track_oob = lt_oob is not None
    cdef cnp.ndarray r_oob_arr
    cdef cnp.ndarray risk_oob_arr
    cdef double[:, ::1] lt_oob_v = None
    cdef double[::1] r_oob = None
    cdef double[::1] risk_oob_v = None
    cdef Py_ssize_t n_oob = 0
    if track_oob:
        lt_oob_v = np.ascontiguousarray(lt_oob, dtype=np.float64)
        r_oob_arr = np.array(y_oob, dtype=np.float64, copy=True)
        r_oob = r_oob_arr
        n_oob = r_oob.shape[0]
        risk_oob_arr = np.empty(m_stop + 1, dtype=np.float64)
        risk_oob_v = risk_oob_arr

    cdef Py_ssize_t m, i, j
    cdef double b, step
    with nogil:
        risk_v[0] = _half_mean_sq(r)
        if track_oob:
            risk_oob_v[0] = _half_mean_sq(r_oob)
        for m in range(m_stop):
            j = _best_learner(lt, r, colsumsq, &b)
            step = sl * b
            for i in range(n):
                r[i] -= step * lt[j, i]
            sel[m] = j
            inc[m] = b
            risk_v[m + 1] = _half_mean_sq(r)
            if track_oob:
                for i in range(n_oob):
                    r_oob[i] -= step * lt_oob_v[j, i]
                risk_oob_v[m + 1] = _half_mean_sq(r_oob)

    if track_oob:
        return selections, increments, risk, risk_oob_arr
    return selections, increments, risk
