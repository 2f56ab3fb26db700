"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 256 4096] [--repeat 5]

Prints one row per kernel and size with the best-of-``repeat`` time for each
backend and the speedup. A final block times whole solver runs with each
backend swapped in.
"""

import argparse
import timeit

import numpy as np

from freebound import _kernels_py, biharmonic, linalg

try:
    from freebound import _kernels
except ImportError:
    _kernels = None


def _cases(n, rng):
    sub, sup = rng.uniform(-1, 0, n - 1), rng.uniform(-1, 0, n - 1)
    diag = 3 + rng.random(n)
    rhs = rng.normal(size=n)
    ab = np.zeros((3, n))
    ab[0], ab[1, :-1], ab[2, :-2] = 6 + rng.random(n), -1.0, 0.5
    u1 = rng.random(n)
    m = int(np.sqrt(n))
    u2 = rng.random((m, m))
    out1, out2 = np.empty(n), np.empty((m, m))
    return {
        "thomas": lambda K: K.thomas(sub, diag, sup, rhs, out1, 0.0),
        "banded_cholesky": lambda K: K.banded_cholesky_solve(ab.copy(), rhs, out1),
        "laplacian_1d": lambda K: K.neumann_laplacian_1d(u1, 0.1, out1),
        f"laplacian_2d ({m}x{m})": lambda K: K.neumann_laplacian_2d(u2, 0.1, out2),
    }


def best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.02 and number < 10**6:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def _solver_runs():
    from freebound.scenarios import build_config, run

    def gf():
        run(build_config("fig1-left"))

    def bih():
        p = biharmonic.BihProblem.from_spacing(1 / 32, 0.05)
        biharmonic.bih_evolve(biharmonic.ramp_ic(p.x), p, 2.0, audit_kkt=False)

    return {"fig1-left gradient flow": gf, "biharmonic h=1/32, 40 steps": bih}


def _use(K):
    linalg.kernels = K
    biharmonic.kernels = K


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 4096])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'n':>6s} {'cython':>11s} {'python':>11s} {'speedup':>8s}")
    for n in args.sizes:
        for name, call in _cases(n, rng).items():
            tc = best(lambda: call(_kernels), args.repeat)
            tp = best(lambda: call(_kernels_py), args.repeat)
            print(f"{name:32s} {n:6d} {tc * 1e6:9.1f}us {tp * 1e6:9.1f}us {tp / tc:7.1f}x")
    print()
    original = linalg.kernels
    try:
        for name, fn in _solver_runs().items():
            _use(_kernels)
            tc = min(timeit.repeat(fn, number=1, repeat=3))
            _use(_kernels_py)
            tp = min(timeit.repeat(fn, number=1, repeat=3))
            print(f"{name:32s} {'':6s} {tc * 1e3:9.1f}ms {tp * 1e3:9.1f}ms {tp / tc:7.1f}x")
    finally:
        _use(original)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
