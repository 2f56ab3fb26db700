"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np


def thomas(sub, diag, sup, rhs, out, tol):
    n = len(diag)
    c = [0.0] * n
    d = [0.0] * n
    piv = diag[0]
    if abs(piv) <= tol:
        return 0
    c[0] = sup[0] / piv if n > 1 else 0.0
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i - 1] * c[i - 1]
        if abs(piv) <= tol:
            return i
        if i < n - 1:
            c[i] = sup[i] / piv
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv
    out[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = d[i] - c[i] * out[i + 1]
    return -1


def banded_cholesky_solve(ab, rhs, out):
    p = ab.shape[0] - 1
    n = ab.shape[1]
    for j in range(n):
        lo = max(0, j - p)
        s = ab[0, j] - sum(ab[j - r, r] ** 2 for r in range(lo, j))
        if s <= 0.0:
            return j
        s = math.sqrt(s)
        ab[0, j] = s
        for q in range(1, min(p, n - 1 - j) + 1):
            lo = max(0, j + q - p)
            acc = ab[q, j] - sum(ab[j + q - r, r] * ab[j - r, r] for r in range(lo, j))
            ab[q, j] = acc / s
    for j in range(n):
        lo = max(0, j - p)
        s = rhs[j] - sum(ab[j - r, r] * out[r] for r in range(lo, j))
        out[j] = s / ab[0, j]
    for j in range(n - 1, -1, -1):
        s = out[j] - sum(ab[q, j] * out[j + q] for q in range(1, min(p, n - 1 - j) + 1))
        out[j] = s / ab[0, j]
    return -1


def neumann_laplacian_1d(u, h, out):
    u = np.asarray(u)
    if u.shape[0] == 1:
        out[0] = 0.0
        return
    flux = np.diff(u)
    res = np.zeros_like(u)
    res[:-1] += flux
    res[1:] -= flux
    out[:] = res / (h * h)


def neumann_laplacian_2d(u, h, out):
    u = np.asarray(u)
    res = np.zeros_like(u)
    fx = np.diff(u, axis=0)
    res[:-1, :] += fx
    res[1:, :] -= fx
    fy = np.diff(u, axis=1)
    res[:, :-1] += fy
    res[:, 1:] -= fy
    out[:, :] = res / (h * h)
