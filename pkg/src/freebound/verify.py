"""Cross-checks between the formulations."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError
from .gradientflow import front_position, gf_evolve
from .linalg import cell_centers
from .mapped import mapped_evolve


@dataclass(frozen=True)
class Comparison:
    front_gap: float
    field_gap: float
    times: np.ndarray
    front_gaps: np.ndarray
    field_gaps: np.ndarray
    mapped_S: np.ndarray
    fixed_S: np.ndarray
    truncated: bool


def transfer(x_mapped, u_mapped, S, x):
    """Cubic interpolation of a mapped snapshot onto the points ``x``.

    The zero at the front closes the spline; beyond ``S`` the field is zero.
    """
    xs = np.append(x_mapped, S)
    us = np.append(u_mapped, 0.0)
    # mirror across x = 0 so the no-flux end is honoured
    xs = np.concatenate((-xs[::-1], xs))
    us = np.concatenate((us[::-1], us))
    out = CubicSpline(xs, us)(x)
    return np.where(x < S, np.maximum(out, 0.0), 0.0)


def compare_methods(u0, N, k, T, length=1.5, workers=2):
    """Run both 1D methods at spacing ``1/N`` and step ``k``; compare up to ``T``.

    The fixed grid covers ``[0, length]`` so the front may advance. If the
    mapped front collapses first, the comparison stops there.
    """
    n_fixed = int(round(N * length))
    if abs(n_fixed / N - length) > 1e-12:
        raise DomainError("length * N must be an integer")
    x = cell_centers(n_fixed, length)
    h = 1.0 / N

    def run_gf():
        return gf_evolve(u0(x), k, T, h)

    def run_mapped():
        return mapped_evolve(u0, N, k, T)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            f_gf, f_m = pool.submit(run_gf), pool.submit(run_mapped)
            gf, (track, snaps) = f_gf.result(), f_m.result()
    else:
        gf, (track, snaps) = run_gf(), run_mapped()
    steps = len(track.S)
    tol = gf.meta["tol_pos"]
    fixed_S = np.array([front_position(gf.snapshots[i], h, tol)[0] for i in range(steps)])
    field = np.array([
        np.max(np.abs(gf.snapshots[i] - transfer(*snaps[i], track.S[i], x)))
        for i in range(steps)
    ])
    front = np.abs(fixed_S - track.S)
    return Comparison(float(front.max()), float(field.max()), track.times, front, field,
                      track.S, fixed_S, track.collapsed)


@dataclass(frozen=True)
class ContractionResult:
    lhs: float
    rhs: float
    passed: bool


def _l2(v, h):
    return float(np.sqrt(h ** v.ndim * np.sum(v**2)))


def contraction_check(u0_a, u0_b, h, k, T, slack=1e-8):
    """``max_n |u_a^n - u_b^n|`` against ``|u_a^0 - u_b^0|`` in the grid L2 norm."""
    u0_a = np.asarray(u0_a, dtype=float)
    u0_b = np.asarray(u0_b, dtype=float)
    if u0_a.shape != u0_b.shape:
        raise DomainError("initial fields differ in shape")
    a = gf_evolve(u0_a, k, T, h, audit_kkt=False).snapshots
    b = gf_evolve(u0_b, k, T, h, audit_kkt=False).snapshots
    lhs = max(_l2(a[i] - b[i], h) for i in range(a.shape[0]))
    rhs = _l2(u0_a - u0_b, h)
    return ContractionResult(lhs, rhs, lhs <= rhs + slack)
