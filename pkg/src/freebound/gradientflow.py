"""Time evolution of the oxygen depletion problem as a constrained gradient flow.

Each step minimises ``E[u] + |u - u_n|^2 / (2k)`` over nonnegative fields,
with ``E[u] = h^d sum(1/2 |grad u|^2 + u)``. The resulting sequence of
snapshots, with linear blending in time, is the Rothe interpolant.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .activeset import QpProblem, active_set_solve, kkt_check
from .errors import DomainError, FreeboundError
from .linalg import neumann_laplacian_apply


@dataclass(frozen=True)
class CensusRecord:
    """Free-boundary census of one field.

    ``holes`` counts the components of the zero set that do not touch the
    edge of the grid.
    """

    boundary_nodes: int
    components: int
    holes: int = 0


@dataclass(frozen=True)
class Trajectory:
    k: float
    h: float
    snapshots: np.ndarray
    energies: np.ndarray
    census: tuple
    iterations: tuple = ()
    extinction_step: int | None = None
    kkt: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def steps(self):
        return self.snapshots.shape[0] - 1

    @property
    def times(self):
        return np.arange(self.snapshots.shape[0]) * self.k

    @property
    def T(self):
        return self.steps * self.k

    @property
    def extinction_time(self):
        return None if self.extinction_step is None else self.extinction_step * self.k


def default_tol_pos(u0):
    return 1e-8 * max(1.0, float(np.max(np.abs(u0), initial=0.0)))


def discrete_energy(u, h):
    """``h^d * sum(1/2 |forward difference / h|^2 + u)``."""
    u = np.asarray(u, dtype=float)
    grad = sum(np.sum(np.diff(u, axis=a) ** 2) for a in range(u.ndim)) / h**2
    return h**u.ndim * (0.5 * grad + np.sum(u))


def gf_step(u_n, k, h, warm=None, return_solution=False):
    """One constrained backward-Euler step."""
    p = QpProblem(u_n, k, h)
    s = active_set_solve(p, warm=warm)
    return (s.u, s) if return_solution else s.u


def free_boundary_census(u, tol_pos):
    """Count free-boundary nodes and connected components of ``{u > tol_pos}``.

    Adjacency is nearest-neighbour (4-neighbour in 2D).
    """
    if tol_pos <= 0:
        raise DomainError("tol_pos must be positive")
    u = np.asarray(u, dtype=float)
    pos = u > tol_pos
    structure = ndimage.generate_binary_structure(u.ndim, 1)
    near_pos = ndimage.binary_dilation(pos, structure=structure)
    boundary = int(np.count_nonzero(near_pos & ~pos))
    _, components = ndimage.label(pos, structure=structure)
    zero_labels, nzero = ndimage.label(~pos, structure=structure)
    edge = np.zeros_like(pos)
    for axis in range(u.ndim):
        sl = [slice(None)] * u.ndim
        sl[axis] = 0
        edge[tuple(sl)] = True
        sl[axis] = -1
        edge[tuple(sl)] = True
    touching = set(np.unique(zero_labels[edge & ~pos]))
    holes = sum(1 for lab in range(1, nzero + 1) if lab not in touching)
    return CensusRecord(boundary, int(components), holes)


def front_position(u, h, tol_pos):
    """Rightmost front of a 1D field, refined with ``u ~ (s - x)^2 / 2``.

    Returns ``(s, i)`` where ``i`` is the last cell with ``u > tol_pos``, or
    ``(0.0, -1)`` when there is none.
    """
    u = np.asarray(u, dtype=float)
    pos = np.flatnonzero(u > tol_pos)
    if pos.size == 0:
        return 0.0, -1
    i = int(pos[-1])
    return (i + 0.5) * h + np.sqrt(2.0 * u[i]), i


def _step_count(k, T):
    if k <= 0 or T < 0:
        raise DomainError("need k > 0 and T >= 0")
    M = int(round(T / k))
    if abs(M * k - T) > 1e-9 * max(1.0, T):
        raise DomainError(f"T={T} is not an integer multiple of k={k}")
    return M


def gf_evolve(u0, k, T, h, tol_pos=None, audit_kkt=True):
    """Run ``T/k`` gradient-flow steps from ``u0`` with warm starts.

    Steps stop once the field is below ``tol_pos`` everywhere; the remaining
    snapshots are zero and ``extinction_step`` records where that happened.
    """
    u0 = np.asarray(u0, dtype=float)
    if np.any(u0 < 0):
        raise DomainError("initial field must be nonnegative")
    M = _step_count(k, T)
    if tol_pos is None:
        tol_pos = default_tol_pos(u0)
    snaps = np.zeros((M + 1,) + u0.shape)
    snaps[0] = u0
    energies = np.zeros(M + 1)
    energies[0] = discrete_energy(u0, h)
    census = [free_boundary_census(u0, tol_pos)]
    iterations, kkt = [], []
    extinct = 0 if np.max(u0, initial=0.0) <= tol_pos else None
    warm = None
    u = u0
    for n in range(M):
        if extinct is not None:
            census.append(census[-1])
            continue
        try:
            u_next, sol = gf_step(u, k, h, warm=warm, return_solution=True)
        except FreeboundError as exc:
            raise type(exc)(f"step {n + 1}: {exc}") from exc
        if audit_kkt:
            kkt.append(kkt_check(QpProblem(u, k, h), sol, 1e-9))
        iterations.append(sol.report.iterations)
        warm = sol.state
        warm.u = None  # restart from u_n, as in the warm-start recipe
        u = u_next
        snaps[n + 1] = u
        energies[n + 1] = discrete_energy(u, h)
        census.append(free_boundary_census(u, tol_pos))
        if np.max(u) <= tol_pos:
            extinct = n + 1
    return Trajectory(k, h, snaps, energies, tuple(census), tuple(iterations),
                      extinct, tuple(kkt), {"tol_pos": tol_pos})


def interpolate_in_time(traj, t):
    """Linear blend of neighbouring snapshots with local weight ``(t - jk)/k``."""
    if not -1e-12 * max(1.0, traj.T) <= t <= traj.T * (1 + 1e-12):
        raise DomainError(f"t={t} outside [0, {traj.T}]")
    s = min(max(t / traj.k, 0.0), traj.steps)
    j = min(int(np.floor(s)), max(traj.steps - 1, 0))
    theta = s - j
    if traj.steps == 0:
        return traj.snapshots[0].copy()
    return (1 - theta) * traj.snapshots[j] + theta * traj.snapshots[j + 1]


def _grad_dot(u, w, h):
    """Discrete ``<grad u, grad w>`` with the h^d weight."""
    return -h**u.ndim * np.sum(neumann_laplacian_apply(u, h) * w)


def default_trials(traj, n_bumps=5):
    """Zero, the trajectory plus five fixed bumps, and twice the trajectory."""
    shape = traj.snapshots.shape[1:]
    axes = [(np.arange(n) + 0.5) / n for n in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    trials = [np.zeros(shape)]
    for c in np.linspace(0.1, 0.9, n_bumps):
        r2 = sum((g - c) ** 2 for g in grids)
        bump = np.maximum(0.0, 1.0 - r2 / 0.04) ** 2
        trials.append(traj.snapshots + bump)
    trials.append(2.0 * traj.snapshots)
    return trials


def vi_residual(traj, trials=None, rule="trapezoid"):
    """Worst signed value of the discrete parabolic variational inequality.

    For each trial path ``v`` evaluates the time sum of
    ``<u_t, v - u> + <grad u, grad(v - u)> + <1, v - u>`` with ``u_t`` the
    forward difference on each step. ``rule='trapezoid'`` averages the other
    factors over the step's endpoints; ``rule='implicit'`` takes them at the
    new time level, for which the gradient-flow iterates satisfy the
    inequality exactly. A trial that is a single field is held fixed in time.
    """
    if trials is None:
        trials = default_trials(traj)
    if rule not in ("trapezoid", "implicit"):
        raise DomainError(f"unknown rule {rule!r}")
    U = traj.snapshots
    h, k = traj.h, traj.k
    w = h ** (U.ndim - 1)
    worst = np.inf
    for v in trials:
        v = np.asarray(v, dtype=float)
        if v.shape == U.shape[1:]:
            v = np.broadcast_to(v, U.shape)
        if v.shape != U.shape:
            raise DomainError(f"trial shape {v.shape} does not match {U.shape}")
        d = v - U
        point = np.array([_grad_dot(U[n], d[n], h) + w * np.sum(d[n]) for n in range(U.shape[0])])
        total = 0.0
        for n in range(U.shape[0] - 1):
            ut = (U[n + 1] - U[n]) / k
            if rule == "implicit":
                total += k * (w * np.sum(ut * d[n + 1]) + point[n + 1])
            else:
                total += k * (w * np.sum(ut * 0.5 * (d[n] + d[n + 1]))
                              + 0.5 * (point[n] + point[n + 1]))
        worst = min(worst, total)
    return float(worst)
