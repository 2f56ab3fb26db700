"""Fourth-order depletion ``u_t = -u_xxxx - 1`` with ``u >= 0`` on ``[0, L]``.

Nodes sit at ``x_i = i h``, ``i = 0..n``. Node 0 carries the Dirichlet value
``u(0) = g0``; the ghost ``u_{-1} = 2 u_0 - u_1`` makes the second difference
vanish there (``u_xx(0) = 0``), so that row drops out of the energy
``h sum(1/2 (D2 u)^2 + u)``. Second differences are taken at nodes
``1..n-1`` only, which leaves the right end free (``u_xx = u_xxx = 0`` in
the limit). Each step is a bound-constrained QP on nodes ``1..n`` with the
pentadiagonal matrix ``I/k + D2^T D2``, solved by the same active set loop
as the second-order problem and banded Cholesky on the inactive block.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .activeset import KktReport, active_set_loop
from .errors import DomainError, FreeboundError, SingularSystem
from .gradientflow import Trajectory, _step_count
from .linalg import SolveReport

S_STAR = (24 / 5) ** 0.25
S_MIN_ENERGY = 24**0.25


@dataclass(frozen=True)
class BihProblem:
    n: int
    k: float
    L: float = 3.0
    g0: float = 1.0

    def __post_init__(self):
        if self.L < 2 or self.L <= S_MIN_ENERGY:
            raise DomainError(f"domain length {self.L} must exceed the contact point")
        if self.n < 4 or self.k <= 0:
            raise DomainError("need n >= 4 and k > 0")

    @classmethod
    def from_spacing(cls, h, k, L=3.0, g0=1.0):
        n = int(round(L / h))
        if abs(n * h - L) > 1e-9 * L:
            raise DomainError(f"L={L} is not a multiple of h={h}")
        return cls(n, k, L, g0)

    @property
    def h(self):
        return self.L / self.n

    @property
    def x(self):
        return np.arange(self.n + 1) * self.h


def d2(full, h):
    """Second differences at nodes ``1..n-1`` of a full nodal vector."""
    return (full[:-2] - 2 * full[1:-1] + full[2:]) / h**2


def d2_transpose(r, h):
    """Adjoint of ``d2`` restricted to the free nodes ``1..n``."""
    g = np.zeros(r.size + 2)
    g[:-2] += r
    g[1:-1] -= 2 * r
    g[2:] += r
    return g[1:] / h**2


def bih_operator_apply(u, p):
    """``(I/k + D2^T D2) u`` on the free nodes, with zero boundary data."""
    u = np.asarray(u, dtype=float)
    full = np.concatenate(([0.0], u))
    return u / p.k + d2_transpose(d2(full, p.h), p.h)


def bih_dense(p):
    """Dense free-node matrix assembled from an explicit difference matrix."""
    n, h = p.n, p.h
    D = np.zeros((n - 1, n + 1))
    for r in range(n - 1):
        D[r, r:r + 3] = np.array([1.0, -2.0, 1.0]) / h**2
    Df = D[:, 1:]
    return np.eye(n) / p.k + Df.T @ Df


def bih_banded(p):
    """Lower band storage ``ab[q, i] = A[i+q, i]`` of the free-node matrix."""
    n, inv = p.n, 1.0 / p.h**4
    ab = np.zeros((3, n))
    # each row r of D2 couples free nodes r, r+1, r+2 (shifted by one)
    stencil = np.array([1.0, -2.0, 1.0])
    for a in range(3):
        for b in range(a, 3):
            w = stencil[a] * stencil[b] * inv
            q = b - a
            # free index of node r+a is r+a-1, for rows r = 0..n-2
            lo = a - 1
            idx = np.arange(n - 1) + lo
            ok = idx >= 0
            np.add.at(ab[q], idx[ok], w)
    ab[0] += 1.0 / p.k
    return ab


def _restrict(ab, index):
    """Band storage of the principal submatrix on the sorted ``index``."""
    m = index.size
    out = np.zeros((3, m))
    out[0] = ab[0, index]
    for q in (1, 2):
        if m > q:
            gap = index[q:] - index[:-q]
            src = np.where(gap <= 2, ab[np.minimum(gap, 2), index[:-q]], 0.0)
            out[q, : m - q] = np.where(gap <= 2, src, 0.0)
    return out


def banded_solve(ab, rhs):
    rhs = np.ascontiguousarray(rhs, dtype=float)
    work = np.ascontiguousarray(ab, dtype=float).copy()
    out = np.empty_like(rhs)
    bad = kernels.banded_cholesky_solve(work, rhs, out)
    if bad >= 0:
        raise SingularSystem(f"banded Cholesky broke down at column {bad}")
    return out


def bih_rhs(u_n, p):
    """``u_n/k - 1`` minus the coupling to the Dirichlet node."""
    r = np.zeros(p.n - 1)
    r[0] = p.g0 / p.h**2
    return np.asarray(u_n, dtype=float)[1:] / p.k - 1.0 - d2_transpose(r, p.h)


def bih_energy(u, p):
    """``h sum(1/2 (D2 u)^2 + u)`` over the free nodes; ``u`` is the full vector."""
    u = np.asarray(u, dtype=float)
    return p.h * (0.5 * np.sum(d2(u, p.h) ** 2) + np.sum(u[1:]))


@dataclass
class BihSolution:
    u: np.ndarray
    multiplier: np.ndarray
    report: SolveReport
    constrained: np.ndarray


def bih_step(u_n, p, warm=None, max_iter=None):
    """One constrained step; ``u_n`` and the result are full nodal vectors.

    The active set loop starts from the constrained set ``warm`` (default:
    the zero set of ``u_n``). The fourth-order matrix is not an M-matrix and
    each pass typically moves the contact by about one node, so the default
    cap grows with the grid: ``max(200, 2 n)``.
    """
    u_n = np.asarray(u_n, dtype=float)
    if u_n.shape != (p.n + 1,):
        raise DomainError(f"expected {p.n + 1} nodal values, got {u_n.shape}")
    if np.any(u_n[1:] < 0):
        raise DomainError("previous field must be nonnegative on free nodes")
    if max_iter is None:
        max_iter = max(200, 2 * p.n)
    ab = bih_banded(p)
    b = bih_rhs(u_n, p)

    def apply(v):
        return bih_operator_apply(v, p)

    def solve_inactive(mask, rhs):
        x = banded_solve(_restrict(ab, np.flatnonzero(mask)), rhs)
        return x, SolveReport(1, 0.0, True, "cholesky")

    if warm is None:
        warm = u_n[1:] <= 0.0
    u, lam, J, m, _ = active_set_loop(apply, solve_inactive, b, u0=u_n[1:],
                                      constrained0=warm, max_iter=max_iter)
    full = np.concatenate(([p.g0], u))
    return BihSolution(full, lam, SolveReport(m, 0.0, True, "active-set"), J)


def bih_kkt(u_n, p, sol, tol):
    b = bih_rhs(u_n, p)
    u, lam = sol.u[1:], sol.multiplier
    return KktReport(
        stationarity=float(np.max(np.abs(bih_operator_apply(u, p) + lam - b))),
        complementarity=float(np.max(np.abs(u * lam))),
        min_u=float(np.min(u)),
        max_multiplier=float(np.max(lam)),
        tol=tol * max(1.0, float(np.max(np.abs(b)))),
    )


def bih_evolve(u0, p, T, audit_kkt=True):
    """March ``T/k`` steps from the nodal field ``u0`` (node 0 reset to ``g0``)."""
    u = np.array(u0, dtype=float)
    if u.shape != (p.n + 1,):
        raise DomainError(f"expected {p.n + 1} nodal values, got {u.shape}")
    u[0] = p.g0
    M = _step_count(p.k, T)
    snaps = np.zeros((M + 1, p.n + 1))
    snaps[0] = u
    energies = [bih_energy(u, p)]
    iters, kkt = [], []
    warm = None
    for n in range(M):
        try:
            sol = bih_step(u, p, warm=warm)
        except FreeboundError as exc:
            raise type(exc)(f"step {n + 1}: {exc}") from exc
        if audit_kkt:
            kkt.append(bih_kkt(u, p, sol, 1e-9))
        iters.append(sol.report.iterations)
        warm = sol.constrained
        u = sol.u
        snaps[n + 1] = u
        energies.append(bih_energy(u, p))
    return Trajectory(p.k, p.h, snaps, np.array(energies), (), tuple(iters), None,
                      tuple(kkt), {"L": p.L, "g0": p.g0})


@dataclass(frozen=True)
class SteadyProfile:
    """``-x^4/24 + a3 x^3 + a1 x + 1`` on ``[0, s]``, zero beyond."""

    s: float
    a3: float
    a1: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = -(x**4) / 24 + self.a3 * x**3 + self.a1 * x + 1.0
        return np.where(x < self.s, u, 0.0)

    def derivatives(self, x):
        """``(u, u', u'', u''')`` of the quartic branch at ``x``."""
        return (
            -(x**4) / 24 + self.a3 * x**3 + self.a1 * x + 1.0,
            -(x**3) / 6 + 3 * self.a3 * x**2 + self.a1,
            -(x**2) / 2 + 6 * self.a3 * x,
            -x + 6 * self.a3,
        )


def bih_steady_analytic(variant="third"):
    """Closed-form steady states with ``u(0) = 1`` and ``u''(0) = 0``.

    ``variant='third'`` closes the contact with ``u = u' = u''' = 0`` and
    gives ``s^4 = 24/5``. ``variant='energy'`` uses ``u = u' = u'' = 0``,
    the smooth-fit condition of the energy minimiser, and gives ``s^4 = 24``.
    """
    if variant == "third":
        s = S_STAR
        return SteadyProfile(s, s / 6, -(s**3) / 3)
    if variant == "energy":
        s = S_MIN_ENERGY
        return SteadyProfile(s, s / 12, -(s**3) / 12)
    raise DomainError(f"unknown variant {variant!r}")


def contact_point(u, x, tol):
    """First node (after the left boundary) with ``u <= tol``."""
    hit = np.flatnonzero(np.asarray(u)[1:] <= tol)
    return float(x[hit[0] + 1]) if hit.size else float(x[-1])


def ramp_ic(x):
    return np.maximum(0.0, 1.0 - x / 2)


def scaled_steady_ic(x, factor=1.5):
    return factor * bih_steady_analytic("third")(x)
