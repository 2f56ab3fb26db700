"""One implicit step of the constrained gradient flow as a bound-constrained QP.

The step minimises

    h^d * sum( 1/2 |grad u|^2 + (u - u_n)^2 / (2k) + u )   subject to u >= 0,

whose KKT system is ``A u + lam = b`` with ``A = I/k - Δ_h``, ``b = u_n/k - 1``,
``lam <= 0``, ``u >= 0``, ``u * lam = 0``. The primal-dual active set loop
below splits the cells into a constrained set J (u = 0) and an inactive set I
and solves the unconstrained system on I each pass.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FreeboundError, NoConvergence
from .linalg import MaskedSpdOperator, SolveReport, neumann_laplacian_apply, solve_spd

DEFAULT_MAX_ITER = 200


@dataclass
class QpProblem:
    u_prev: np.ndarray
    k: float
    h: float

    def __post_init__(self):
        self.u_prev = np.asarray(self.u_prev, dtype=float)
        if self.k <= 0 or self.h <= 0:
            raise DomainError("k and h must be positive")
        if np.any(self.u_prev < 0):
            raise DomainError("previous field must be nonnegative")

    @property
    def shape(self):
        return self.u_prev.shape


@dataclass
class ActiveSetState:
    """Partition of the cells plus the multiplier field."""

    constrained: np.ndarray
    multiplier: np.ndarray
    u: np.ndarray | None = None

    @property
    def inactive(self):
        return ~self.constrained


@dataclass
class QpSolution:
    u: np.ndarray
    multiplier: np.ndarray
    report: SolveReport
    state: ActiveSetState = field(repr=False, default=None)


@dataclass
class KktReport:
    stationarity: float
    complementarity: float
    min_u: float
    max_multiplier: float
    tol: float

    @property
    def passed(self):
        return (
            self.stationarity <= self.tol
            and self.complementarity <= self.tol
            and self.min_u >= -self.tol
            and self.max_multiplier <= self.tol
        )


def assemble_rhs(p):
    return p.u_prev / p.k - 1.0


def apply_system(u, k, h):
    """``A u`` with ``A = I/k - Δ_h``."""
    return u / k - neumann_laplacian_apply(u, h)


def step_energy(p, u):
    """The minimised functional, evaluated exactly."""
    u = np.asarray(u, dtype=float)
    w = p.h**u.ndim
    grad = sum(np.sum(np.diff(u, axis=a) ** 2) for a in range(u.ndim)) / p.h**2
    return w * (0.5 * grad + np.sum((u - p.u_prev) ** 2) / (2 * p.k) + np.sum(u))


def active_set_loop(apply, solve_inactive, b, u0=None, constrained0=None,
                    max_iter=DEFAULT_MAX_ITER):
    """Index-set iteration for ``min 1/2 u.Au - b.u`` subject to ``u >= 0``.

    ``apply(u)`` returns ``A u``; ``solve_inactive(mask, rhs)`` solves the
    restriction of A to ``mask``. Either ``u0`` (cold-type start: sets come
    from the multiplier of ``u0``) or ``constrained0`` (sets given) seeds the
    loop. Returns ``(u, lam, constrained, iterations, inner_reports)``.
    """
    b = np.asarray(b, dtype=float)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(b), initial=0.0)))
    u = np.zeros_like(b) if u0 is None else np.array(u0, dtype=float)
    lam = np.minimum(0.0, b - apply(u))
    J = None if constrained0 is None else np.array(constrained0, dtype=bool)
    J_prev = None
    inner = []
    m = 0
    while True:
        if J is None or m > 0:
            J = lam < -tol
            J |= ~J & (u < -1e-12 * max(1.0, float(np.max(np.abs(u), initial=0.0))))
        if J_prev is not None and np.array_equal(J, J_prev):
            break
        if m >= max_iter:
            raise NoConvergence(
                f"active set loop exceeded {max_iter} iterations",
                state={"u": u, "multiplier": lam, "constrained": J, "iterations": m},
            )
        inactive = ~J
        u = np.zeros_like(b)
        if inactive.any():
            u_I, rep = solve_inactive(inactive, b[inactive])
            u[inactive] = u_I
            inner.append(rep)
        lam = np.minimum(0.0, b - apply(u))
        J_prev = J
        m += 1
    u = np.maximum(u, 0.0)
    u[J] = 0.0
    lam = b - apply(u)
    lam[~J] = 0.0
    return u, lam, J, m, inner


def _solve_report(m, inner, **extra):
    extra["inner_iterations"] = max((r.iterations for r in inner), default=0)
    extra["inner_residual"] = max((r.residual for r in inner), default=0.0)
    return SolveReport(m, extra["inner_residual"], True, "active-set", extra)


def active_set_solve(p, warm=None, max_iter=DEFAULT_MAX_ITER, inner_tol=1e-12):
    """Minimise one gradient-flow step by the primal-dual active set method.

    With ``warm`` (an ActiveSetState from the previous step) the loop starts
    from ``u = warm.u`` (defaulting to ``u_n``) and the previous constrained
    set; otherwise from ``u = 0``. A warm start that hits the iteration cap
    is retried once from the cold start, for which finite termination holds.
    """
    b = assemble_rhs(p)
    shape = p.shape

    def apply(v):
        return apply_system(v, p.k, p.h)

    def solve_inactive(mask, rhs):
        op = MaskedSpdOperator(shape, p.h, p.k, mask)
        return solve_spd(op, rhs, rel_tol=inner_tol)

    fallback = False
    try:
        if warm is not None:
            u0 = p.u_prev if warm.u is None else warm.u
            if np.any(u0 < 0):
                raise DomainError("warm start field must be nonnegative")
            out = active_set_loop(apply, solve_inactive, b, u0=u0,
                                  constrained0=warm.constrained, max_iter=max_iter)
        else:
            out = active_set_loop(apply, solve_inactive, b, max_iter=max_iter)
    except NoConvergence:
        if warm is None:
            raise
        fallback = True
        out = active_set_loop(apply, solve_inactive, b, max_iter=max_iter)
    u, lam, J, m, inner = out
    report = _solve_report(m, inner, warm=warm is not None, fallback=fallback)
    return QpSolution(u, lam, report, ActiveSetState(J, lam, u))


def kkt_check(p, s, tol):
    b = assemble_rhs(p)
    u = np.asarray(s.u, dtype=float)
    lam = np.asarray(s.multiplier, dtype=float)
    stat = np.max(np.abs(apply_system(u, p.k, p.h) + lam - b))
    return KktReport(
        stationarity=float(stat),
        complementarity=float(np.max(np.abs(u * lam))),
        min_u=float(np.min(u)),
        max_multiplier=float(np.max(lam)),
        tol=tol,
    )


def dense_system(shape, h, k):
    """Dense ``I/k - Δ_h`` built from the edge-incidence matrix."""
    n = int(np.prod(shape))
    idx = np.arange(n).reshape(shape)
    rows = []
    for axis in range(len(shape)):
        a = np.take(idx, range(shape[axis] - 1), axis=axis).ravel()
        c = np.take(idx, range(1, shape[axis]), axis=axis).ravel()
        for i, j in zip(a, c):
            e = np.zeros(n)
            e[i], e[j] = -1.0, 1.0
            rows.append(e)
    D = np.array(rows).reshape(-1, n)
    return np.eye(n) / k + D.T @ D / h**2


def brute_force_qp(p):
    """Enumerate every (J, I) partition; return the unique KKT point.

    Exponential in the number of cells, so limited to 16.
    """
    n = int(np.prod(p.shape))
    if n > 16:
        raise DomainError("enumeration limited to 16 unknowns")
    A = dense_system(p.shape, p.h, p.k)
    b = assemble_rhs(p).ravel()
    tol = 1e-11 * max(1.0, np.max(np.abs(b)))
    for bits in itertools.product((False, True), repeat=n):
        inactive = np.array(bits)
        u = np.zeros(n)
        if inactive.any():
            u[inactive] = np.linalg.solve(A[np.ix_(inactive, inactive)], b[inactive])
        lam = b - A @ u
        if np.all(u[inactive] >= -tol) and np.all(lam[~inactive] <= tol):
            return np.maximum(u, 0.0).reshape(p.shape)
    raise FreeboundError("no KKT-feasible partition found")
