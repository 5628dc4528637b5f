# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels; same contracts as ``_fallback``."""
import numpy as np
cimport cython
from libc.math cimport sin, cos, fabs


cdef inline double complex cexp_neg_i(double x) nogil:
    # exp(-i x)
    return cos(x) - 1j * sin(x)


cdef inline double sinc(double x) nogil:
    if fabs(x) < 1e-6:
        return 1.0 - x * x / 6.0
    return sin(x) / x


def unitaries(double complex[:, :, ::1] V, double[:, ::1] w, double dt):
    cdef Py_ssize_t n = V.shape[0], L = V.shape[1]
    cdef Py_ssize_t k, i, j, m
    out = np.zeros((n, L, L), dtype=np.complex128)
    cdef double complex[:, :, ::1] U = out
    cdef double complex[::1] ph = np.empty(L, dtype=np.complex128)
    cdef double complex acc
    with nogil:
        for k in range(n):
            for m in range(L):
                ph[m] = cexp_neg_i(w[k, m] * dt)
            for i in range(L):
                for j in range(L):
                    acc = 0
                    for m in range(L):
                        acc = acc + V[k, i, m] * ph[m] * V[k, j, m].conjugate()
                    U[k, i, j] = acc
    return out


def forward_chain(double complex[:, :, ::1] U, psi0):
    cdef Py_ssize_t n = U.shape[0], L = U.shape[1]
    cdef Py_ssize_t k, i, j
    out = np.empty((n + 1, L), dtype=np.complex128)
    cdef double complex[:, ::1] S = out
    cdef double complex[::1] p0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    cdef double complex acc
    with nogil:
        for i in range(L):
            S[0, i] = p0[i]
        for k in range(n):
            for i in range(L):
                acc = 0
                for j in range(L):
                    acc = acc + U[k, i, j] * S[k, j]
                S[k + 1, i] = acc
    return out


def backward_chain(double complex[:, :, ::1] U, target):
    cdef Py_ssize_t n = U.shape[0], L = U.shape[1]
    cdef Py_ssize_t k, i, j
    out = np.empty((n + 1, L), dtype=np.complex128)
    cdef double complex[:, ::1] S = out
    cdef double complex[::1] t0 = np.ascontiguousarray(target, dtype=np.complex128)
    cdef double complex acc
    with nogil:
        for i in range(L):
            S[n, i] = t0[i]
        for k in range(n - 1, -1, -1):
            for i in range(L):
                acc = 0
                for j in range(L):
                    acc = acc + U[k, j, i].conjugate() * S[k + 1, j]
                S[k, i] = acc
    return out


def slice_overlaps(double complex[:, :, ::1] V, double[:, ::1] w, double dt,
                   double complex[:, ::1] fwd, double complex[:, ::1] bwd):
    cdef Py_ssize_t n = V.shape[0], L = V.shape[1]
    cdef Py_ssize_t k, i, a, b
    out = np.zeros((n, L), dtype=np.complex128)
    cdef double complex[:, ::1] D = out
    cdef double complex[::1] ca = np.empty(L, dtype=np.complex128)
    cdef double complex[::1] cb = np.empty(L, dtype=np.complex128)
    cdef double complex[:, ::1] M = np.empty((L, L), dtype=np.complex128)
    cdef double complex acc, accb, kern
    with nogil:
        for k in range(n):
            # rotate costate and state into the slice eigenbasis
            for a in range(L):
                acc = 0
                accb = 0
                for i in range(L):
                    acc = acc + V[k, i, a].conjugate() * bwd[k + 1, i]
                    accb = accb + V[k, i, a].conjugate() * fwd[k, i]
                ca[a] = acc
                cb[a] = accb
            for a in range(L):
                for b in range(L):
                    kern = (-1j * dt) * cexp_neg_i(0.5 * dt * (w[k, a] + w[k, b])) \
                        * sinc(0.5 * dt * (w[k, a] - w[k, b]))
                    M[a, b] = ca[a].conjugate() * kern * cb[b]
            for i in range(L):
                acc = 0
                for a in range(L):
                    accb = 0
                    for b in range(L):
                        accb = accb + M[a, b] * V[k, i, b]
                    acc = acc + V[k, i, a].conjugate() * accb
                D[k, i] = acc
    return out
