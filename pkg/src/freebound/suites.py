"""Acceptance checks, shared by ``freebound verify`` and the test suite.

Each check returns a ``Criterion`` with a pass flag and a one-line detail.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import biharmonic as bih
from .activeset import QpProblem, active_set_solve, brute_force_qp
from .linalg import cell_centers
from .mapped import convergence_study, default_workers
from .presets import quadratic
from .regularized import monotonicity_report
from .scenarios import SCENARIOS, build_config, run
from .verify import compare_methods, contraction_check


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.name}: {self.detail}"


def _qp_instances(seed=20240607):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(50):
        n = int(rng.integers(1, 13))
        u = rng.random(n) * (rng.random(n) < 0.6) * rng.uniform(0.01, 1.0)
        out.append(QpProblem(u, float(rng.uniform(1e-3, 0.5)), float(rng.uniform(0.05, 1.0))))
    for _ in range(50):
        u = rng.random((3, 3)) * (rng.random((3, 3)) < 0.6) * rng.uniform(0.01, 1.0)
        out.append(QpProblem(u, float(rng.uniform(1e-3, 0.5)), float(rng.uniform(0.05, 1.0))))
    return out


@lru_cache(maxsize=None)
def scenario(name):
    return run(build_config(name))


@lru_cache(maxsize=None)
def bih_runs(h):
    p = bih.BihProblem.from_spacing(h, 0.05)
    return p, tuple(bih.bih_evolve(ic(p.x), p, 20.0) for ic in (bih.ramp_ic, bih.scaled_steady_ic))


def qp_oracle():
    worst = 0.0
    for p in _qp_instances():
        worst = max(worst, float(np.max(np.abs(active_set_solve(p).u - brute_force_qp(p)))))
    return Criterion(1, "QP oracle equivalence", worst < 1e-10,
                     f"max |active set - enumeration| = {worst:.2e} over 100 instances")


def finite_convergence():
    cold_ok = all(active_set_solve(p).report.iterations <= p.u_prev.size for p in _qp_instances())
    left = max(scenario("fig1-left").trajectory.iterations[3:])
    right = max(scenario("fig1-right").trajectory.iterations[3:])
    return Criterion(2, "finite convergence", cold_ok and left <= 5,
                     f"cold <= unknowns: {cold_ok}; fig1-left warm max {left} "
                     f"(fig1-right {right}, near extinction)")


def _dissipates(e):
    return bool(np.all(np.diff(e) <= 1e-10 * (1 + abs(e[0]))))


def energy_dissipation():
    runs = {name: scenario(name).trajectory.energies for name in SCENARIOS}
    for h in (1 / 64, 1 / 128):
        for i, tr in enumerate(bih_runs(h)[1]):
            runs[f"bih h={h:g} ic{i}"] = tr.energies
    bad = [k for k, e in runs.items() if not _dissipates(e)]
    return Criterion(3, "energy dissipation", not bad,
                     f"{len(runs)} runs, violations: {bad or 'none'}")


def contraction(trials=200, seed=7):
    rng = np.random.default_rng(seed)
    n = 64
    fails, worst = 0, -np.inf
    for _ in range(trials):
        a = rng.random(n) * (rng.random(n) < 0.7) * rng.uniform(0, 0.3)
        b = rng.random(n) * (rng.random(n) < 0.7) * rng.uniform(0, 0.3)
        r = contraction_check(a, b, 1 / n, 1e-3, 0.1)
        fails += not r.passed
        worst = max(worst, r.lhs - r.rhs)
    return Criterion(4, "contraction", fails == 0,
                     f"{trials - fails}/{trials} pairs pass; max(lhs - rhs) = {worst:.2e}")


def mapped_orders(workers=None):
    workers = workers or default_workers()
    rep_h = convergence_study(quadratic, N_list=(32, 64, 128, 256), t_probe=0.02,
                              k_fixed=1e-5, workers=workers)
    rep_k = convergence_study(quadratic, k_list=(4e-3, 2e-3, 1e-3, 5e-4), t_probe=0.02,
                              N_fixed=512, workers=workers)
    ok = 1.8 <= rep_h.p_h <= 2.2 and 0.8 <= rep_k.p_k <= 1.2
    return Criterion(5, "mapped-method orders", ok, f"p_h = {rep_h.p_h:.3f}, p_k = {rep_k.p_k:.3f}")


def cross_agreement():
    a = compare_methods(quadratic, 128, 1e-4, 0.05, length=1.0)
    b = compare_methods(quadratic, 256, 5e-5, 0.05, length=1.0)
    ratio = a.field_gap / b.field_gap
    ok = a.field_gap <= 5e-2 and ratio >= 1.8 and not a.truncated
    return Criterion(6, "cross-formulation agreement", ok,
                     f"field gap {a.field_gap:.2e} -> {b.field_gap:.2e} (ratio {ratio:.2f}); "
                     f"front gap {a.front_gap:.2e}")


def reg_monotonicity():
    n = 128
    rep = monotonicity_report(quadratic(cell_centers(n)), [1e2, 1e3, 1e4], 1e-3, 0.05, 1 / n)
    ok = rep.monotone and rep.limit_gaps[2] <= rep.limit_gaps[1]
    gaps = ", ".join(f"{g:.1e}" for g in rep.limit_gaps)
    return Criterion(7, "regularization monotonicity", ok,
                     f"max(u^b - u^c) = {max(rep.pair_gaps):.1e}; gaps to gradient flow {gaps}")


def _ordered(seq, pattern):
    """True if ``pattern`` occurs in order (not necessarily adjacent) in ``seq``."""
    it = iter(seq)
    return all(any(v == p for v in it) for p in pattern)


def _dedupe(seq):
    return [v for i, v in enumerate(seq) if i == 0 or v != seq[i - 1]]


def topology_1d():
    comps = [c.components for c in scenario("fig2").trajectory.census]
    seq = _dedupe(comps)
    ok = seq[0] == 1 and _ordered(seq, [1, 2, 0])
    return Criterion(8, "topology sequence 1D", ok, f"components {seq}")


def topology_2d():
    census = scenario("fig3").trajectory.census
    comps = _dedupe([c.components for c in census])
    holes = _dedupe([c.holes for c in census])
    merge = next((i for i, c in enumerate(census) if c.components == 1), None)
    fill = None
    if merge is not None and census[merge].holes == 1:
        fill = next((i for i in range(merge, len(census)) if census[i].holes == 0), None)
    ok = comps[0] == 2 and fill is not None
    return Criterion(9, "topology sequence 2D", ok,
                     f"components {comps}, holes {holes}")


def biharmonic_steady():
    errs, errs_min = [], []
    for h in (1 / 64, 1 / 128):
        p, runs = bih_runs(h)
        for variant, out in (("third", errs), ("energy", errs_min)):
            target = bih.bih_steady_analytic(variant)(p.x)
            out.append(max(float(np.max(np.abs(tr.snapshots[-1] - target))) for tr in runs))
    ok = errs[0] <= 4 / 64 and errs[1] <= 4 / 128 and errs[0] / errs[1] >= 1.7
    return Criterion(10, "biharmonic steady state", ok,
                     f"error vs s*=(24/5)^(1/4) profile {errs[0]:.3e}, {errs[1]:.3e} "
                     f"(limits {4 / 64:.3e}, {4 / 128:.3e}); vs u''(s)=0 profile "
                     f"{errs_min[0]:.1e}, {errs_min[1]:.1e}")


def kkt_audit():
    reports = []
    for name in SCENARIOS:
        reports += scenario(name).trajectory.kkt
    for h in (1 / 64, 1 / 128):
        for tr in bih_runs(h)[1]:
            reports += tr.kkt
    bad = sum(not r.passed for r in reports)
    return Criterion(11, "KKT audit", bad == 0 and len(reports) > 0,
                     f"{len(reports) - bad}/{len(reports)} steps pass at tol 1e-9")


CHECKS = {
    1: qp_oracle,
    2: finite_convergence,
    3: energy_dissipation,
    4: contraction,
    5: mapped_orders,
    6: cross_agreement,
    7: reg_monotonicity,
    8: topology_1d,
    9: topology_2d,
    10: biharmonic_steady,
    11: kkt_audit,
}


def run_all(numbers=None):
    return [CHECKS[n]() for n in (numbers or sorted(CHECKS))]
