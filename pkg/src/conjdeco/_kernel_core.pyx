# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel-assembly hot loop.

Same contract as conjdeco._kernel_fallback.weighted_gram_dfactor; exploits
Hermitian symmetry and computes only the upper triangle.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def weighted_gram_dfactor(const double complex[:, ::1] vt,
                          const double[::1] w,
                          const double complex[::1] d):
    cdef Py_ssize_t n = vt.shape[0]
    cdef Py_ssize_t m = vt.shape[1]
    if w.shape[0] != m:
        raise ValueError("weight length does not match node count")
    if d.shape[0] != 2 * n - 1:
        raise ValueError("decoherence factor must have length 2n-1")
    out = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t j, k, a
    cdef double complex acc
    for j in range(n):
        for k in range(j, n):
            acc = 0
            for a in range(m):
                acc = acc + w[a] * vt[j, a] * vt[k, a].conjugate()
            o[j, k] = acc * d[j - k + n - 1]
            if k != j:
                o[k, j] = acc.conjugate() * d[k - j + n - 1]
    return out


def banded_gram_dfactor(const double complex[:, ::1] vt,
                        const double[::1] w,
                        const double complex[::1] d,
                        Py_ssize_t band):
    cdef Py_ssize_t n = vt.shape[0]
    cdef Py_ssize_t m = vt.shape[1]
    if w.shape[0] != m:
        raise ValueError("weight length does not match node count")
    if d.shape[0] != 2 * n - 1:
        raise ValueError("decoherence factor must have length 2n-1")
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t j, k, a, kmax
    cdef double complex acc
    for j in range(n):
        kmax = j + band + 1
        if kmax > n:
            kmax = n
        for k in range(j, kmax):
            acc = 0
            for a in range(m):
                acc = acc + w[a] * vt[j, a] * vt[k, a].conjugate()
            o[j, k] = acc * d[j - k + n - 1]
            if k != j:
                o[k, j] = acc.conjugate() * d[k - j + n - 1]
    return out
