"""Initial conditions and the named scenarios the CLI exposes."""

import numpy as np

from .errors import DomainError


def quadratic(x):
    """``(1 - x)^2 / 2`` on [0, 1], zero beyond."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 1.0, 0.5 * (1.0 - x) ** 2, 0.0)


def nonmonotone(x):
    """``-x^4 + 3x^3 - 5x^2/2 + 1/2`` on [0, 1], zero beyond."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 1.0, -x**4 + 3 * x**3 - 2.5 * x**2 + 0.5, 0.0)


def twobump(x):
    """Profile with a shallow dip at x = 1/3 that splits under depletion."""
    x = np.asarray(x, dtype=float)
    left = ((1 / 3 - x) ** 2 + 0.05) / ((5 / 12) ** 2 + 0.05) / 16
    right = (1.0 - x) ** 2
    return np.where(x <= 0.75, left, np.where(x < 1.0, right, 0.0))


def uniform(x):
    return np.ones_like(np.asarray(x, dtype=float))


def two_arcs(X, Y, plateau=0.05, steepness=4.0, r_in=0.12, r_out=0.4, gap=0.05):
    """Two disjoint arcs of a ring around the centre of the unit square.

    Each arc is ``min(plateau, steepness * d^2)`` with ``d`` the distance to
    the arc's edge; the arcs are split by a straight gap of half-width
    ``gap``. With ``steepness > 1/2`` the edges advance: the gap closes
    first, leaving a ring around a bounded zero set, which then fills in.
    """
    dx, dy = X - 0.5, Y - 0.5
    r = np.hypot(dx, dy)
    d = np.minimum(np.minimum(r - r_in, r_out - r), np.abs(dx) - gap)
    return np.minimum(plateau, steepness * np.maximum(d, 0.0) ** 2)


IC_1D = {
    "quadratic": quadratic,
    "nonmonotone": nonmonotone,
    "twobump": twobump,
    "uniform": uniform,
}

IC_2D = {
    "twoarcs": two_arcs,
}


def load_ic_file(path):
    """Read an initial condition: two columns ``x,u`` (header optional)."""
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2,
                      skiprows=_header_rows(path))
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns x,u")
    xs, us = data[:, 0], data[:, 1]

    def ic(x):
        return np.interp(x, xs, us, left=us[0], right=0.0)

    return ic


def _header_rows(path):
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.split(",")]
        return 0
    except ValueError:
        return 1


def resolve_ic(name, dim=1):
    if name.startswith("file:"):
        if dim != 1:
            raise DomainError("file initial conditions are 1D only")
        return load_ic_file(name[5:])
    table = IC_1D if dim == 1 else IC_2D
    if name not in table:
        raise DomainError(f"unknown {dim}D initial condition {name!r}; choose from {sorted(table)}")
    return table[name]
