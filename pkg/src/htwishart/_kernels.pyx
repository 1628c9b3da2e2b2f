# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-draw kernels for the Monte Carlo hot loop.

Each routine walks a batch of small dense matrices draw by draw with the
GIL released. The signatures mirror ``_kernels_py`` exactly.
"""
import numpy as np

from libc.math cimport sqrt


def bartlett_factors(const double[:, ::1] chi2, const double[:, ::1] normals):
    """Lower-triangular Bartlett factors T with T_ii^2 = chi2 and T_ij = normals."""
    cdef Py_ssize_t n = chi2.shape[0], d = chi2.shape[1]
    cdef Py_ssize_t s, i, j, idx
    out = np.zeros((n, d, d))
    cdef double[:, :, ::1] t = out
    with nogil:
        for s in range(n):
            idx = 0
            for i in range(d):
                t[s, i, i] = sqrt(chi2[s, i])
                for j in range(i):
                    t[s, i, j] = normals[s, idx]
                    idx = idx + 1
    return out


def assemble_alg(const double[:, :, ::1] T, const double[:, :, ::1] Z,
                 const double[:, ::1] A, const double[:, ::1] R, double scale):
    """X = scale * A Z T^{-1} R for every draw (A lower triangular)."""
    cdef Py_ssize_t n = Z.shape[0], K = Z.shape[1], N = Z.shape[2]
    cdef Py_ssize_t s, k, l, i, j
    cdef double acc
    out = np.empty((n, K, N))
    cdef double[:, :, ::1] x = out
    cdef double[:, ::1] y = np.empty((K, N))
    cdef double[:, ::1] u = np.empty((K, N))
    with nogil:
        for s in range(n):
            # y T = z, back substitution over columns
            for k in range(K):
                for j in range(N - 1, -1, -1):
                    acc = Z[s, k, j]
                    for i in range(j + 1, N):
                        acc = acc - y[k, i] * T[s, i, j]
                    y[k, j] = acc / T[s, j, j]
            for k in range(K):
                for j in range(N):
                    acc = 0.0
                    for l in range(k + 1):
                        acc = acc + A[k, l] * y[l, j]
                    u[k, j] = acc
            for k in range(K):
                for j in range(N):
                    acc = 0.0
                    for i in range(N):
                        acc = acc + u[k, i] * R[i, j]
                    x[s, k, j] = scale * acc
    return out


def assemble_gauss(const double[:, :, ::1] Z, const double[:, ::1] A, const double[:, ::1] B):
    """X = A Z B^T for every draw (A, B lower triangular)."""
    cdef Py_ssize_t n = Z.shape[0], K = Z.shape[1], N = Z.shape[2]
    cdef Py_ssize_t s, k, l, i, j
    cdef double acc
    out = np.empty((n, K, N))
    cdef double[:, :, ::1] x = out
    cdef double[:, ::1] u = np.empty((K, N))
    with nogil:
        for s in range(n):
            for k in range(K):
                for j in range(N):
                    acc = 0.0
                    for l in range(k + 1):
                        acc = acc + A[k, l] * Z[s, l, j]
                    u[k, j] = acc
            for k in range(K):
                for j in range(N):
                    acc = 0.0
                    for i in range(j + 1):
                        acc = acc + u[k, i] * B[j, i]
                    x[s, k, j] = acc
    return out


def gram_batch(const double[:, :, ::1] X, int side, int order):
    """X X^T / N (side 0) or X^T X / K (side 1), squared when order == 2."""
    cdef Py_ssize_t n = X.shape[0], K = X.shape[1], N = X.shape[2]
    cdef Py_ssize_t d = K if side == 0 else N
    cdef Py_ssize_t s, i, j, k
    cdef double acc, norm = 1.0 / (N if side == 0 else K)
    out = np.empty((n, d, d))
    cdef double[:, :, ::1] w = out
    cdef double[:, ::1] g = np.empty((d, d))
    with nogil:
        for s in range(n):
            for i in range(d):
                for j in range(i, d):
                    acc = 0.0
                    if side == 0:
                        for k in range(N):
                            acc = acc + X[s, i, k] * X[s, j, k]
                    else:
                        for k in range(K):
                            acc = acc + X[s, k, i] * X[s, k, j]
                    g[i, j] = acc * norm
                    g[j, i] = g[i, j]
            if order == 1:
                for i in range(d):
                    for j in range(d):
                        w[s, i, j] = g[i, j]
            else:
                for i in range(d):
                    for j in range(i, d):
                        acc = 0.0
                        for k in range(d):
                            acc = acc + g[i, k] * g[k, j]
                        w[s, i, j] = acc
                        w[s, j, i] = acc
    return out


def inverse_entries(const double[:, :, ::1] T):
    """[S^-1]_11, [S^-1]_22, [S^-1]_12 for S = T T^T / 2."""
    cdef Py_ssize_t n = T.shape[0], d = T.shape[1]
    cdef Py_ssize_t s, i, l
    cdef double acc, a, b, c
    out = np.zeros((n, 3))
    cdef double[:, ::1] o = out
    cdef double[::1] u0 = np.zeros(d)
    cdef double[::1] u1 = np.zeros(d)
    with nogil:
        for s in range(n):
            # first two columns of T^{-1} by forward substitution
            for i in range(d):
                acc = 1.0 if i == 0 else 0.0
                for l in range(i):
                    acc = acc - T[s, i, l] * u0[l]
                u0[i] = acc / T[s, i, i]
                if d > 1:
                    acc = 1.0 if i == 1 else 0.0
                    for l in range(i):
                        acc = acc - T[s, i, l] * u1[l]
                    u1[i] = acc / T[s, i, i]
            a = 0.0
            b = 0.0
            c = 0.0
            for i in range(d):
                a = a + u0[i] * u0[i]
                if d > 1:
                    b = b + u1[i] * u1[i]
                    c = c + u0[i] * u1[i]
            o[s, 0] = 2.0 * a
            o[s, 1] = 2.0 * b
            o[s, 2] = 2.0 * c
    return out


def trace_form(const double[:, :, ::1] X, const double[:, ::1] J, double norm):
    """tr(X^T J X) / norm for every draw."""
    cdef Py_ssize_t n = X.shape[0], K = X.shape[1], N = X.shape[2]
    cdef Py_ssize_t s, k, l, j
    cdef double acc, row
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for s in range(n):
            acc = 0.0
            for k in range(K):
                for l in range(K):
                    row = 0.0
                    for j in range(N):
                        row = row + X[s, k, j] * X[s, l, j]
                    acc = acc + J[k, l] * row
            o[s] = acc / norm
    return out


def condition_bound(const double[:, :, ::1] T):
    """(||T||_F ||T^-1||_F)^2, an upper bound on the condition number of T T^T."""
    cdef Py_ssize_t n = T.shape[0], d = T.shape[1]
    cdef Py_ssize_t s, i, j, l
    cdef double acc, fro, inv
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double[:, ::1] u = np.zeros((d, d))
    with nogil:
        for s in range(n):
            fro = 0.0
            inv = 0.0
            for i in range(d):
                for j in range(i + 1):
                    fro = fro + T[s, i, j] * T[s, i, j]
            # columns of T^{-1} by forward substitution
            for j in range(d):
                for i in range(j, d):
                    acc = 1.0 if i == j else 0.0
                    for l in range(j, i):
                        acc = acc - T[s, i, l] * u[l, j]
                    u[i, j] = acc / T[s, i, i]
                    inv = inv + u[i, j] * u[i, j]
            o[s] = fro * inv
    return out
