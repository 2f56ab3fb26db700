"""Banded and matrix-free linear algebra on uniform cell-centred grids.

Fields are plain numpy arrays (1D or 2D) with a scalar spacing ``h``. Cell
``i`` sits at ``(i + 1/2) h``; homogeneous Neumann closure uses a mirror
ghost, so the discrete Laplacian is the (negative) graph Laplacian of the
grid scaled by ``1/h**2``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DomainError, NoConvergence, SingularSystem


@dataclass
class SolveReport:
    """Iteration counts and residuals of one iterative or nonlinear solve."""

    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    method: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class BandedSystem:
    """Tridiagonal matrix given by its three diagonals."""

    sub: np.ndarray
    main: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        self.sub = np.ascontiguousarray(self.sub, dtype=float)
        self.main = np.ascontiguousarray(self.main, dtype=float)
        self.sup = np.ascontiguousarray(self.sup, dtype=float)
        n = self.main.shape[0]
        if n < 1 or self.sub.shape != (n - 1,) or self.sup.shape != (n - 1,):
            raise DomainError(
                f"inconsistent diagonals: main {self.main.shape}, "
                f"sub {self.sub.shape}, sup {self.sup.shape}"
            )

    @property
    def n(self):
        return self.main.shape[0]

    def matvec(self, x):
        y = self.main * x
        y[:-1] += self.sup * x[1:]
        y[1:] += self.sub * x[:-1]
        return y

    def dense(self):
        return np.diag(self.main) + np.diag(self.sup, 1) + np.diag(self.sub, -1)


def solve_tridiagonal(sys, rhs):
    """Solve ``sys @ x = rhs`` by elimination without pivoting.

    Raises SingularSystem when a pivot falls within 1e-14 of the matrix scale.
    """
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if rhs.shape != (sys.n,):
        raise DomainError(f"rhs shape {rhs.shape} does not match n={sys.n}")
    scale = max(
        np.max(np.abs(sys.main)),
        np.max(np.abs(sys.sub), initial=0.0),
        np.max(np.abs(sys.sup), initial=0.0),
    )
    out = np.empty(sys.n)
    bad = kernels.thomas(sys.sub, sys.main, sys.sup, rhs, out, 1e-14 * scale)
    if bad >= 0:
        raise SingularSystem(f"zero pivot at row {bad}")
    return out


def neumann_laplacian_apply(u, h):
    """Five-point (2D) or three-point (1D) Laplacian with no-flux closure."""
    u = np.ascontiguousarray(u, dtype=float)
    if h <= 0:
        raise DomainError("spacing h must be positive")
    out = np.empty_like(u)
    if u.ndim == 1:
        kernels.neumann_laplacian_1d(u, float(h), out)
    elif u.ndim == 2:
        kernels.neumann_laplacian_2d(u, float(h), out)
    else:
        raise DomainError(f"unsupported dimension {u.ndim}")
    return out


def neighbour_count(shape):
    """Number of in-grid neighbours of every cell."""
    count = np.zeros(shape)
    for axis, n in enumerate(shape):
        if n < 2:
            continue
        lo = [slice(None)] * len(shape)
        hi = [slice(None)] * len(shape)
        lo[axis] = slice(0, n - 1)
        hi[axis] = slice(1, n)
        count[tuple(lo)] += 1
        count[tuple(hi)] += 1
    return count


class MaskedSpdOperator:
    """``u -> u/k + shift*u - Δ_h u`` restricted to the cells where ``inactive``.

    Rows and columns outside the inactive set are removed, which is the same
    as clamping those cells to zero. ``shift`` is an optional nonnegative
    per-cell addition to the diagonal.
    """

    def __init__(self, shape, h, k, inactive=None, shift=None):
        if h <= 0 or k <= 0:
            raise DomainError("h and k must be positive")
        self.shape = tuple(shape)
        self.h = float(h)
        self.k = float(k)
        if inactive is None:
            inactive = np.ones(self.shape, dtype=bool)
        self.inactive = np.asarray(inactive, dtype=bool).reshape(self.shape)
        self.index = np.flatnonzero(self.inactive)
        diag = np.full(self.shape, 1.0 / self.k)
        if shift is not None:
            diag = diag + np.broadcast_to(shift, self.shape)
        self.diag_full = diag

    @property
    def size(self):
        return self.index.size

    def embed(self, x):
        full = np.zeros(self.shape)
        full.flat[self.index] = x
        return full

    def apply(self, x):
        full = self.embed(x)
        y = self.diag_full * full - neumann_laplacian_apply(full, self.h)
        return y.flat[self.index]

    def tridiagonal(self):
        """Compressed tridiagonal form of the 1D operator."""
        if len(self.shape) != 1:
            raise DomainError("tridiagonal form exists only in 1D")
        inv = 1.0 / self.h**2
        idx = self.index
        main = self.diag_full[idx] + neighbour_count(self.shape)[idx] * inv
        off = np.where(np.diff(idx) == 1, -inv, 0.0)
        return BandedSystem(off, main, off.copy())


def conjugate_gradient(apply, b, rel_tol, max_iter, x0=None):
    """Plain CG; stops when the max-norm residual is <= rel_tol * ||b||_inf."""
    b = np.asarray(b, dtype=float)
    bnorm = np.max(np.abs(b), initial=0.0)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True, "cg")
    target = rel_tol * bnorm
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply(x)
    p = r.copy()
    rr = r @ r
    it = 0
    while it < max_iter:
        res = np.max(np.abs(r))
        if res <= target:
            # recursive residual drifts; confirm with the true one
            r = b - apply(x)
            res = np.max(np.abs(r))
            if res <= target:
                return x, SolveReport(it, res / bnorm, True, "cg")
            p = r.copy()
            rr = r @ r
        Ap = apply(p)
        alpha = rr / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    res = np.max(np.abs(b - apply(x))) / bnorm
    raise NoConvergence(
        f"CG did not reach rel_tol={rel_tol:g} in {max_iter} iterations "
        f"(residual {res:.3e})",
        state={"x": x, "residual": res},
    )


def solve_spd(op, rhs, rel_tol=1e-12, max_iter=None, x0=None):
    """Solve ``op x = rhs`` on the inactive cells.

    1D operators go through the tridiagonal solver; 2D ones through CG.
    """
    if not 0.0 < rel_tol < 1.0:
        raise DomainError("rel_tol must lie in (0, 1)")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (op.size,):
        raise DomainError(f"rhs has shape {rhs.shape}, expected ({op.size},)")
    if op.size == 0 or not np.any(rhs):
        return np.zeros(op.size), SolveReport(0, 0.0, True, "trivial")
    if len(op.shape) == 1:
        x = solve_tridiagonal(op.tridiagonal(), rhs)
        res = np.max(np.abs(op.apply(x) - rhs)) / np.max(np.abs(rhs))
        return x, SolveReport(1, res, True, "tridiagonal")
    if max_iter is None:
        max_iter = 10 * op.size
    return conjugate_gradient(op.apply, rhs, rel_tol, max_iter, x0=x0)


def cell_centers(n, length=1.0):
    """Cell-centre coordinates of ``n`` uniform cells on ``[0, length]``."""
    h = length / n
    return (np.arange(n) + 0.5) * h
