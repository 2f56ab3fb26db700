# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Every function here has a twin in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def thomas(const double[::1] sub, const double[::1] diag, const double[::1] sup,
           const double[::1] rhs, double[::1] out, double tol):
    """Tridiagonal elimination without pivoting.

    Returns -1 on success, else the row index of the first pivot with
    magnitude <= tol.
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double piv
    cdef double[::1] c = np.empty(n, dtype=np.float64)
    cdef double[::1] d = np.empty(n, dtype=np.float64)
    piv = diag[0]
    if fabs(piv) <= tol:
        return 0
    c[0] = sup[0] / piv if n > 1 else 0.0
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i - 1] * c[i - 1]
        if fabs(piv) <= tol:
            return i
        if i < n - 1:
            c[i] = sup[i] / piv
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv
    out[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = d[i] - c[i] * out[i + 1]
    return -1


def banded_cholesky_solve(double[:, ::1] ab, const double[::1] rhs, double[::1] out):
    """Solve an SPD banded system stored in lower form ``ab[q, i] = A[i+q, i]``.

    ``ab`` is overwritten by its Cholesky factor. Returns -1 on success, else
    the column where a non-positive pivot appeared.
    """
    cdef Py_ssize_t p = ab.shape[0] - 1
    cdef Py_ssize_t n = ab.shape[1]
    cdef Py_ssize_t j, q, r, lo
    cdef double s
    for j in range(n):
        s = ab[0, j]
        lo = j - p if j >= p else 0
        for r in range(lo, j):
            s -= ab[j - r, r] * ab[j - r, r]
        if s <= 0.0:
            return j
        s = sqrt(s)
        ab[0, j] = s
        for q in range(1, p + 1):
            if j + q >= n:
                break
            lo = j + q - p if j + q >= p else 0
            for r in range(lo, j):
                ab[q, j] -= ab[j + q - r, r] * ab[j - r, r]
            ab[q, j] /= s
    for j in range(n):
        s = rhs[j]
        lo = j - p if j >= p else 0
        for r in range(lo, j):
            s -= ab[j - r, r] * out[r]
        out[j] = s / ab[0, j]
    for j in range(n - 1, -1, -1):
        s = out[j]
        for q in range(1, p + 1):
            if j + q >= n:
                break
            s -= ab[q, j] * out[j + q]
        out[j] = s / ab[0, j]
    return -1


def neumann_laplacian_1d(const double[::1] u, double h, double[::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double inv = 1.0 / (h * h)
    if n == 1:
        out[0] = 0.0
        return
    out[0] = (u[1] - u[0]) * inv
    for i in range(1, n - 1):
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv
    out[n - 1] = (u[n - 2] - u[n - 1]) * inv


def neumann_laplacian_2d(const double[:, ::1] u, double h, double[:, ::1] out):
    cdef Py_ssize_t nx = u.shape[0]
    cdef Py_ssize_t ny = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double inv = 1.0 / (h * h)
    cdef double c, acc
    for i in range(nx):
        for j in range(ny):
            c = u[i, j]
            acc = 0.0
            if i > 0:
                acc += u[i - 1, j] - c
            if i < nx - 1:
                acc += u[i + 1, j] - c
            if j > 0:
                acc += u[i, j - 1] - c
            if j < ny - 1:
                acc += u[i, j + 1] - c
            out[i, j] = acc * inv
