"""Front tracking on the mapped domain ``y = x / s(t)`` in 1D.

The field lives on cell centres ``y_j = (j - 1/2) h``, ``j = 1..N``, with
``h = 1/N``. The interior rows are

    D2 u^j + S S' y_j D1 u^j - S^2 u'^j - S^2 = 0,

closed by the mirror ghost ``u^0 = u^1`` at ``y = 0`` and by the pair
``(u^{N+1} + u^N)/2 = 0``, ``(u^{N+1} - u^N)/h = 0`` at ``y = 1``. The latter
force ``u^N = u^{N+1} = 0``, so the Newton unknowns are ``u^1..u^{N-1}`` and
``S``. Time stepping is backward Euler.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, FrontCollapse, NoConvergence, SingularSystem
from .linalg import BandedSystem, SolveReport, solve_tridiagonal

S_MIN = 1e-3
NEWTON_CAP = 25


@dataclass
class MappedState:
    """Values ``u^1..u^N`` at the mapped cell centres, front ``S`` and time ``t``."""

    u: np.ndarray
    S: float
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.ndim != 1 or self.u.size < 3:
            raise DomainError("need N >= 3 mapped cells")
        if not self.S > 0:
            raise DomainError(f"front position must be positive, got {self.S}")
        if not np.all(np.isfinite(self.u)):
            raise DomainError("mapped field has non-finite values")

    @property
    def N(self):
        return self.u.size

    @property
    def h(self):
        return 1.0 / self.N

    @property
    def y(self):
        return (np.arange(self.N) + 0.5) * self.h

    @property
    def x(self):
        return self.y * self.S


@dataclass(frozen=True)
class DaeResidual:
    interior: np.ndarray
    boundary: np.ndarray

    def max_norm(self):
        return float(max(np.max(np.abs(self.interior)), np.max(np.abs(self.boundary))))


@dataclass(frozen=True)
class InterfaceTrack:
    times: np.ndarray
    S: np.ndarray
    newton_iterations: tuple = ()
    collapsed: bool = False
    meta: dict = field(default_factory=dict)


def _interior_rows(u, ghost, S, udot, Sdot, h, y, source=None):
    """Interior rows given ``u^1..u^N`` and the right ghost ``u^{N+1}``."""
    ext = np.concatenate(([u[0]], u, [ghost]))
    d2 = (ext[:-2] - 2 * ext[1:-1] + ext[2:]) / h**2
    d1 = (ext[2:] - ext[:-2]) / (2 * h)
    r = d2 + S * Sdot * y * d1 - S**2 * udot - S**2
    if source is not None:
        r = r + source
    return r


def dae_residual(state, udot, Sdot, ghost=0.0, source=None):
    """Evaluate all ``N + 2`` rows of the semi-discrete system.

    ``ghost`` is the value of ``u^{N+1}``; ``source`` is an optional extra
    term added to each interior row (used for manufactured solutions).
    """
    udot = np.asarray(udot, dtype=float)
    if udot.shape != state.u.shape:
        raise DomainError(f"udot has shape {udot.shape}, expected {state.u.shape}")
    h = state.h
    interior = _interior_rows(state.u, ghost, state.S, udot, Sdot, h, state.y, source)
    uN = state.u[-1]
    boundary = np.array([(ghost + uN) / 2, (ghost - uN) / h])
    return DaeResidual(interior, boundary)


def boundary_block(h):
    """Coefficients of ``(u^N, u^{N+1})`` in the two right boundary rows."""
    return np.array([[0.5, 0.5], [-1.0 / h, 1.0 / h]])


def _reduced(v, prev, k, h, y, source):
    """Residual in the reduced unknowns ``v = (u^1..u^{N-1}, S)``."""
    u = np.append(v[:-1], 0.0)
    S = v[-1]
    return _interior_rows(u, 0.0, S, (u - prev.u) / k, (S - prev.S) / k, h, y, source)


def _jacobian(v, prev, k, h, y):
    """Bordered form: tridiagonal block, last-row entry, S column, corner."""
    N = v.size
    u = np.append(v[:-1], 0.0)
    S = v[-1]
    Sdot = (S - prev.S) / k
    ext = np.concatenate(([u[0]], u, [0.0]))
    d1 = (ext[2:] - ext[:-2]) / (2 * h)
    c = S * Sdot * y / (2 * h)
    lower = 1.0 / h**2 - c
    upper = 1.0 / h**2 + c
    main = np.full(N, -2.0 / h**2 - S**2 / k)
    main[0] += lower[0]  # mirror ghost folds into the first cell
    dS = (2 * S - prev.S) / k * y * d1 - 2 * S * (u - prev.u) / k - 2 * S
    m = N - 1
    tri = BandedSystem(lower[1:m], main[:m], upper[: m - 1])
    return tri, lower[m], dS[:m], dS[m]


def jacobian_dense(v, prev, k):
    """Dense Newton matrix, for checks."""
    N = v.size
    h = 1.0 / N
    y = (np.arange(N) + 0.5) * h
    tri, a, g, d = _jacobian(v, prev, k, h, y)
    J = np.zeros((N, N))
    J[: N - 1, : N - 1] = tri.dense()
    J[: N - 1, -1] = g
    J[-1, -2] = a
    J[-1, -1] = d
    return J


def _bordered_solve(tri, a, g, d, r):
    """Solve ``[[T, g], [a e_last, d]] [x; s] = r`` with two tridiagonal solves."""
    z = solve_tridiagonal(tri, r[:-1])
    w = solve_tridiagonal(tri, g)
    denom = d - a * w[-1]
    if denom == 0 or not np.isfinite(denom):
        raise SingularSystem("bordered Newton matrix is singular")
    s = (r[-1] - a * z[-1]) / denom
    return np.append(z - s * w, s)


def implicit_euler_newton(state_n, k, newton_tol=1e-10, max_iter=NEWTON_CAP,
                          S_min=S_MIN, source=None):
    """One backward-Euler step, solved by Newton from the previous state.

    ``source``, if given, is called as ``source(y, t)`` at the new time level.
    """
    if k <= 0:
        raise DomainError("time step must be positive")
    N, h, y = state_n.N, state_n.h, state_n.y
    t = state_n.t + k
    src = None if source is None else source(y, t)
    v = np.append(state_n.u[:-1], state_n.S)
    r = _reduced(v, state_n, k, h, y, src)
    res = np.max(np.abs(r))
    it = 0
    while res > newton_tol:
        if it >= max_iter:
            raise NoConvergence(
                f"Newton did not converge in {max_iter} iterations (residual {res:.3e})",
                state={"u": v[:-1], "S": v[-1], "residual": res},
            )
        v = v - _bordered_solve(*_jacobian(v, state_n, k, h, y), r)
        it += 1
        if not v[-1] > S_min:
            raise FrontCollapse(f"front fell to {v[-1]:.3e} near t={t:.6g}", t=t, S=v[-1])
        r = _reduced(v, state_n, k, h, y, src)
        res = np.max(np.abs(r))
    if not v[-1] > S_min:
        raise FrontCollapse(f"front fell to {v[-1]:.3e} near t={t:.6g}", t=t, S=v[-1])
    new = MappedState(np.append(v[:-1], 0.0), float(v[-1]), t)
    return new, SolveReport(it, float(res), True, "newton")


def initial_state(u0, N, S0=1.0):
    """Sample ``u0`` at ``x = y_j S0``, shifted down so that ``u^N = 0``.

    Near the front the rows are stationary for ``S^2((1-y)^2 - h^2/4)/2``,
    which is the sampled quadratic minus its last-cell value. Zeroing the
    last cell alone leaves a kink that drives a spurious O(1/h) front speed
    in the first steps.
    """
    y = (np.arange(N) + 0.5) / N
    u = np.asarray(u0(y * S0), dtype=float)
    u = np.maximum(u - u[-1], 0.0)
    u[-1] = 0.0
    return MappedState(u, S0, 0.0)


def mapped_evolve(u0, N, k, T, S0=1.0, newton_tol=1e-10, source=None, keep=True):
    """March to ``T`` or until the front collapses.

    Returns ``(track, snapshots)``; each snapshot is ``(x, u)`` in physical
    coordinates. A collapse ends the run early with ``track.collapsed`` set.
    """
    if k <= 0 or T < 0:
        raise DomainError("need k > 0 and T >= 0")
    M = int(round(T / k))
    if abs(M * k - T) > 1e-9 * max(1.0, T):
        raise DomainError(f"T={T} is not an integer multiple of k={k}")
    state = initial_state(u0, N, S0)
    times, fronts, iters = [0.0], [state.S], []
    snaps = [(state.x, state.u.copy())] if keep else []
    collapsed = False
    for n in range(M):
        try:
            state, rep = implicit_euler_newton(state, k, newton_tol, source=source)
        except FrontCollapse:
            collapsed = True
            break
        state.t = (n + 1) * k  # avoid drift from repeated addition
        times.append(state.t)
        fronts.append(state.S)
        iters.append(rep.iterations)
        if keep:
            snaps.append((state.x, state.u.copy()))
    track = InterfaceTrack(np.array(times), np.array(fronts), tuple(iters), collapsed,
                           {"N": N, "k": k})
    return track, snaps if keep else [(state.x, state.u.copy())]


def _final(u0, N, k, t_probe, source):
    track, snaps = mapped_evolve(u0, N, k, t_probe, source=source, keep=False)
    if track.collapsed:
        raise DomainError(f"front collapsed before t_probe (N={N}, k={k})")
    x, u = snaps[-1]
    return x / track.S[-1], u, track.S[-1]


def _gap(coarse, fine):
    """Max gap in ``u`` (fine run splined onto the coarse centres) and ``S``."""
    yc, uc, Sc = coarse
    yf, uf, Sf = fine
    # natural extension past the last centre: the field is zero at y = 1
    spline = CubicSpline(np.append(yf, 1.0), np.append(uf, 0.0))
    return max(np.max(np.abs(spline(yc) - uc)), abs(Sf - Sc))


def _slope(scales, errors):
    return float(np.polyfit(np.log(scales), np.log(errors), 1)[0])


def _run_all(jobs, workers):
    if workers == 1:
        return [_final(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: _final(*j), jobs))


@dataclass(frozen=True)
class ConvergenceReport:
    p_h: float | None
    p_k: float | None
    h_errors: tuple = ()
    k_errors: tuple = ()
    N_list: tuple = ()
    k_list: tuple = ()


def convergence_study(u0, N_list=(), k_list=(), t_probe=0.02, k_fixed=1e-5, N_fixed=512,
                      source=None, workers=None):
    """Observed orders in ``h`` and ``k`` from successive self-convergence gaps.

    Each list is refined by factors of two. The space study runs every ``N``
    at ``k_fixed``; the time study runs every ``k`` at ``N_fixed``. Gaps
    between neighbouring resolutions are fitted by least squares in log-log
    scale; with ``m`` runs there are ``m - 1`` gaps, so each list needs at
    least three entries to give a fitted slope. An empty list skips that study.
    """
    for lst in (N_list, k_list):
        if 0 < len(lst) < 3:
            raise DomainError("a convergence study needs at least three resolutions")
    if workers is None:
        workers = default_workers()
    p_h = p_k = None
    h_err = k_err = ()
    if N_list:
        N_list = sorted(N_list)
        runs = _run_all([(u0, N, k_fixed, t_probe, source) for N in N_list], workers)
        h_err = tuple(_gap(c, f) for c, f in zip(runs, runs[1:]))
        p_h = _slope([1.0 / N for N in N_list[:-1]], h_err)
    if k_list:
        k_list = sorted(k_list, reverse=True)
        runs = _run_all([(u0, N_fixed, k, t_probe, source) for k in k_list], workers)
        k_err = tuple(_gap(c, f) for c, f in zip(runs, runs[1:]))
        p_k = _slope(k_list[:-1], k_err)
    return ConvergenceReport(p_h, p_k, h_err, k_err, tuple(N_list), tuple(k_list))


def default_workers():
    import os

    env = os.environ.get("FREEBOUND_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


class QuarticManufactured:
    """Exact pair ``u = g(t)(1 - y^2)^2``, ``S = 1 - a t`` and its source.

    The profile honours all three boundary conditions and is linear in time,
    so backward Euler adds no time error and the observed error is spatial.
    """

    def __init__(self, g0=0.1, g1=-0.5, a=0.5):
        self.g0, self.g1, self.a = g0, g1, a

    def g(self, t):
        return self.g0 + self.g1 * t

    def S(self, t):
        return 1.0 - self.a * t

    def u(self, y, t):
        return self.g(t) * (1 - y**2) ** 2

    def initial(self, x):
        return self.u(np.asarray(x, dtype=float) / self.S(0.0), 0.0)

    def source(self, y, t):
        g, S, Sdot = self.g(t), self.S(t), -self.a
        u_y = -4 * g * y * (1 - y**2)
        u_yy = g * (12 * y**2 - 4)
        u_t = self.g1 * (1 - y**2) ** 2
        return -(u_yy + S * Sdot * y * u_y - S**2 * u_t - S**2)
