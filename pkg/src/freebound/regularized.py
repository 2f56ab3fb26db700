"""Regularized depletion: the indicator of ``{u > 0}`` smoothed to ``min(1, c u)``.

Each backward-Euler step solves

    (u - u_n)/k - Δ_h u + 1 + min(0, -1 + c u) = 0,

which is the optimality condition of a strictly convex problem, so the step
is unique and the regularized energy ``h^d sum(1/2 |grad u|^2 + F_c(u))``
decreases along the trajectory.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoConvergence
from .gradientflow import (
    Trajectory,
    _step_count,
    default_tol_pos,
    free_boundary_census,
    gf_evolve,
)
from .linalg import MaskedSpdOperator, SolveReport, neumann_laplacian_apply, solve_spd

MAX_ITER = 200
RESIDUAL_TOL = 1e-11


@dataclass(frozen=True)
class RegParams:
    c: float
    k: float
    h: float

    def __post_init__(self):
        if not (self.c > 0 and self.k > 0 and self.h > 0):
            raise DomainError("c, k and h must all be positive")


def f_epsilon(u, eps):
    """1 where ``u > eps``, ``u / eps`` elsewhere."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    u = np.asarray(u, dtype=float)
    out = np.where(u > eps, 1.0, u / eps)
    return out if out.ndim else float(out)


def reg_residual(u, u_n, p):
    return (u - u_n) / p.k - neumann_laplacian_apply(u, p.h) + 1.0 + np.minimum(0.0, -1.0 + p.c * u)


def reg_energy(u, c, h):
    """``h^d sum(1/2 |grad u|^2 + F_c(u))`` with ``F_c' = min(1, c u)``."""
    u = np.asarray(u, dtype=float)
    grad = sum(np.sum(np.diff(u, axis=a) ** 2) for a in range(u.ndim)) / h**2
    F = np.where(c * u <= 1.0, 0.5 * c * u**2, u - 0.5 / c)
    return h**u.ndim * (0.5 * grad + np.sum(F))


def reg_step(u_n, p, max_iter=MAX_ITER, return_report=False):
    """One implicit step by a semismooth iteration on the set ``{c u < 1}``.

    On that set the row reads ``u/k + c u - Δ_h u = u_n/k``; elsewhere
    ``u/k - Δ_h u = u_n/k - 1``. The partition is recomputed from each
    iterate until it repeats.
    """
    u_n = np.asarray(u_n, dtype=float)
    if np.any(u_n < 0):
        raise DomainError("previous field must be nonnegative")
    u = u_n.copy()
    base = u_n / p.k
    kinked = None
    for it in range(1, max_iter + 1):
        new = p.c * u < 1.0
        if kinked is not None and np.array_equal(new, kinked):
            break
        kinked = new
        op = MaskedSpdOperator(u.shape, p.h, p.k, shift=np.where(kinked, p.c, 0.0))
        rhs = base - np.where(kinked, 0.0, 1.0)
        x, _ = solve_spd(op, rhs.ravel(), rel_tol=1e-14)
        u = x.reshape(u.shape)
    else:
        raise NoConvergence(f"regularized step: partition still moving after {max_iter} passes",
                            state={"u": u})
    res = float(np.max(np.abs(reg_residual(u, u_n, p))))
    tol = RESIDUAL_TOL * max(1.0, float(np.max(np.abs(base))))
    if res > tol:
        raise NoConvergence(f"regularized step residual {res:.3e} above {tol:.1e}",
                            state={"u": u, "residual": res})
    report = SolveReport(it - 1, res, True, "semismooth")
    return (u, report) if return_report else u


def reg_evolve(u0, p, T, tol_pos=None):
    """``T/k`` regularized steps; returns a Trajectory with the regularized energy."""
    u0 = np.asarray(u0, dtype=float)
    if np.any(u0 < 0):
        raise DomainError("initial field must be nonnegative")
    M = _step_count(p.k, T)
    if tol_pos is None:
        tol_pos = default_tol_pos(u0)
    snaps = np.zeros((M + 1,) + u0.shape)
    snaps[0] = u = u0
    energies = [reg_energy(u0, p.c, p.h)]
    census = [free_boundary_census(u0, tol_pos)]
    iters = []
    for n in range(M):
        u, rep = reg_step(u, p, return_report=True)
        snaps[n + 1] = u
        energies.append(reg_energy(u, p.c, p.h))
        census.append(free_boundary_census(u, tol_pos))
        iters.append(rep.iterations)
    return Trajectory(p.k, p.h, snaps, np.array(energies), tuple(census), tuple(iters),
                      None, (), {"tol_pos": tol_pos, "c": p.c})


@dataclass(frozen=True)
class MonotonicityReport:
    c_list: tuple
    pair_gaps: tuple      # max over steps of max(u^b - u^c), per consecutive pair
    limit_gaps: tuple     # max over steps of |u^c - u^gf|, per c
    tol: float = 1e-9

    @property
    def monotone(self):
        return all(g <= self.tol for g in self.pair_gaps)

    @property
    def limit_ordered(self):
        return all(b <= a for a, b in zip(self.limit_gaps, self.limit_gaps[1:]))

    @property
    def passed(self):
        return self.monotone


def monotonicity_report(u0, c_list, k, T, h, workers=1):
    """Check ``u^c >= u^b`` for every step and consecutive ``c < b``.

    Also records the sup-norm gap of each run to the constrained
    gradient flow from the same data.
    """
    c_list = tuple(float(c) for c in c_list)
    if len(c_list) < 2 or any(b < a for a, b in zip(c_list, c_list[1:])):
        raise DomainError("c_list must be ascending with at least two entries")

    def run(c):
        return reg_evolve(u0, RegParams(c, k, h), T).snapshots

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, c_list))
    else:
        runs = [run(c) for c in c_list]
    gf = gf_evolve(u0, k, T, h).snapshots
    pair = tuple(float(np.max(b - a)) for a, b in zip(runs, runs[1:]))
    limit = tuple(float(np.max(np.abs(r - gf))) for r in runs)
    return MonotonicityReport(c_list, pair, limit)
