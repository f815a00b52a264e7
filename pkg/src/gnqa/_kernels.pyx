# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every function here has a numpy twin in :mod:`gnqa._fallback` with the same
signature; :mod:`gnqa._backend` picks one at import time.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

def sym_coupling_matvec(Py_ssize_t n, const long[::1] qi, const long[::1] qj,
                        const double[::1] qv, const double[::1] w):
    """out = J w for the symmetric coupling matrix stored as upper COO."""
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t e, i, j
    cdef double v
    with nogil:
        for e in range(qv.shape[0]):
            i = qi[e]
            j = qj[e]
            v = qv[e]
            o[i] += v * w[j]
            o[j] += v * w[i]
    return out


def _csr(Py_ssize_t n, qi, qj, qv):
    qi = np.asarray(qi, dtype=np.int64)
    qj = np.asarray(qj, dtype=np.int64)
    qv = np.asarray(qv, dtype=np.float64)
    rows = np.concatenate([qi, qj])
    cols = np.concatenate([qj, qi])
    vals = np.concatenate([qv, qv])
    order = np.argsort(rows, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=ptr[1:])
    return ptr, np.ascontiguousarray(cols[order]), np.ascontiguousarray(vals[order])


cdef void _block_energy(Py_ssize_t off, Py_ssize_t nb, const double* lin,
                        const long* ptr, const long* col, const double* val,
                        double g0, double delta, double* E) noexcept nogil:
    """Energies of the terms inside variables [off, off + nb) for all 2**nb states.

    E[idx | 2**m] = E[idx] + delta * (lin_m + sum_k q_mk g_k(idx)) for idx < 2**m;
    neighbours above m are still at g0 there.
    """
    cdef Py_ssize_t m, idx, e, k, size
    cdef double acc, base, gk
    base = 0.0
    for m in range(nb):
        base += lin[off + m] * g0
        for e in range(ptr[off + m], ptr[off + m + 1]):
            k = col[e] - off
            if k > m and k < nb:
                base += val[e] * g0 * g0
    E[0] = base
    for m in range(nb):
        size = (<Py_ssize_t>1) << m
        for idx in range(size):
            acc = lin[off + m]
            for e in range(ptr[off + m], ptr[off + m + 1]):
                k = col[e] - off
                if k < 0 or k >= nb or k == m:
                    continue
                if k < m and (idx >> k) & 1:
                    gk = g0 + delta
                else:
                    gk = g0
                acc += val[e] * gk
            E[idx + size] = E[idx] + delta * acc


cdef object _table(Py_ssize_t n, const double[::1] lin, qi, qj, qv, double g0, double delta):
    """All 2**n values of sum lin_k g_k + sum_{i<j} q_ij g_i g_j, g = g0 + delta * bit.

    Variables split into a low block of a bits and a high block of b bits.
    For a fixed high state the cross terms are linear in the low bits, so a
    row of the table is E_hi + E_lo + V with V filled by doubling, one add
    per entry and sequential writes.
    """
    cdef long[::1] ptr
    cdef long[::1] col
    cdef double[::1] val
    p, c, v = _csr(n, qi, qj, qv)
    ptr, col, val = p, c, v
    cdef Py_ssize_t a = n // 2 if n > 1 else n
    cdef Py_ssize_t b = n - a
    cdef Py_ssize_t La = (<Py_ssize_t>1) << a
    cdef Py_ssize_t Lb = (<Py_ssize_t>1) << b
    out = np.empty(La * Lb, dtype=np.float64)
    e_lo_arr = np.empty(La, dtype=np.float64)
    e_hi_arr = np.empty(Lb, dtype=np.float64)
    lin_hi_arr = np.zeros(n, dtype=np.float64)
    F_arr = np.empty(a if a > 0 else 1, dtype=np.float64)
    cdef double[::1] d = out
    cdef double[::1] e_lo = e_lo_arr
    cdef double[::1] e_hi = e_hi_arr
    cdef double[::1] F = F_arr
    cdef Py_ssize_t hi, lo, k, e, j, m, size, row
    cdef double acc, eh, gj
    with nogil:
        _block_energy(0, a, &lin[0], &ptr[0], &col[0], &val[0], g0, delta, &e_lo[0])
        if b > 0:
            _block_energy(a, b, &lin[0], &ptr[0], &col[0], &val[0], g0, delta, &e_hi[0])
        else:
            e_hi[0] = 0.0
        for hi in range(Lb):
            acc = 0.0
            for k in range(a):
                F[k] = 0.0
                for e in range(ptr[k], ptr[k + 1]):
                    j = col[e] - a
                    if j >= 0:
                        gj = g0 + delta if (hi >> j) & 1 else g0
                        F[k] += val[e] * gj
                acc += F[k] * g0
            row = hi * La
            eh = e_hi[hi]
            d[row] = acc
            for m in range(a):
                size = (<Py_ssize_t>1) << m
                for lo in range(size):
                    d[row + lo + size] = d[row + lo] + delta * F[m]
            for lo in range(La):
                d[row + lo] += eh + e_lo[lo]
    return out


def spin_diagonal(Py_ssize_t n, const double[::1] h, qi, qj, qv, int block_bits=12):
    """Ising energies sum h_k s_k + sum J_ij s_i s_j for all 2**n spin states.

    Bit k of the index set means s_k = -1. ``block_bits`` is accepted for
    signature compatibility and ignored.
    """
    return _table(n, h, qi, qj, qv, 1.0, -2.0)


def binary_values(Py_ssize_t n, const double[::1] lin, qi, qj, qv, int block_bits=12):
    """Values sum a_k x_k + sum_{i<j} q_ij x_i x_j for all 2**n binary vectors."""
    return _table(n, lin, qi, qj, qv, 0.0, 1.0)
