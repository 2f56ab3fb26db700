import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freebound.errors import DomainError, NoConvergence
from freebound.linalg import MaskedSpdOperator, cell_centers, solve_spd
from freebound.presets import quadratic
from freebound.regularized import (
    RegParams,
    f_epsilon,
    monotonicity_report,
    reg_evolve,
    reg_residual,
    reg_step,
)


def test_f_epsilon_branches():
    eps = 0.01
    assert f_epsilon(2 * eps, eps) == 1.0
    assert f_epsilon(eps / 2, eps) == 0.5
    assert f_epsilon(0.0, eps) == 0.0
    assert f_epsilon(eps, eps) == 1.0
    np.testing.assert_allclose(f_epsilon(np.array([0, eps / 4, 1.0]), eps), [0, 0.25, 1])
    with pytest.raises(DomainError):
        f_epsilon(1.0, 0.0)


def test_params_validate():
    with pytest.raises(DomainError):
        RegParams(0.0, 1e-3, 0.1)


def test_step_zero_and_uniform():
    p = RegParams(100.0, 0.01, 0.1)
    assert np.all(reg_step(np.zeros(10), p) == 0)
    np.testing.assert_allclose(reg_step(np.full(10, 5.0), p), 5.0 - 0.01, atol=1e-13)
    np.testing.assert_allclose(reg_step(np.full((4, 4), 5.0), p), 4.99, atol=1e-12)


def _fixed_point(u_n, p, iters=2000):
    """Damped Picard iteration on the smoothed consumption term."""
    op = MaskedSpdOperator(u_n.shape, p.h, p.k)
    u = u_n.copy()
    for _ in range(iters):
        new, _ = solve_spd(op, u_n / p.k - f_epsilon(u, 1 / p.c))
        if np.max(np.abs(new - u)) < 1e-15:
            break
        u = 0.5 * u + 0.5 * new
    return new


@pytest.mark.parametrize("seed", range(4))
def test_step_matches_fixed_point(seed):
    rng = np.random.default_rng(seed)
    n = 12
    p = RegParams(10.0, 0.05, 1 / n)
    u_n = rng.random(n) * 0.3
    np.testing.assert_allclose(reg_step(u_n, p), _fixed_point(u_n, p), atol=1e-8)


def test_step_residual_small():
    n = 64
    p = RegParams(1e4, 1e-3, 1 / n)
    u_n = quadratic(cell_centers(n))
    u, rep = reg_step(u_n, p, return_report=True)
    assert np.max(np.abs(reg_residual(u, u_n, p))) <= 1e-11 * max(1, np.max(u_n) / p.k)
    assert rep.iterations < 20


def test_step_cap():
    n = 64
    p = RegParams(1e4, 1e-3, 1 / n)
    with pytest.raises(NoConvergence):
        reg_step(quadratic(cell_centers(n)), p, max_iter=1)


def test_evolve_zero():
    tr = reg_evolve(np.zeros(6), RegParams(10.0, 0.1, 0.2), 0.5)
    assert np.all(tr.snapshots == 0)


def test_uniform_decay_matches_gradient_flow_then_stays_positive():
    tr = reg_evolve(np.ones(5), RegParams(1e6, 0.1, 0.2), 1.5)
    np.testing.assert_allclose(tr.snapshots[:10, 0], 1 - 0.1 * np.arange(10), atol=1e-12)
    tail = tr.snapshots[10:, 0]
    assert np.all(tail >= 0) and np.all(np.diff(tail) <= 0)
    assert tail[0] < 1e-5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1e1, 1e3, 1e5]))
def test_nonnegativity_and_dissipation(seed, c):
    rng = np.random.default_rng(seed)
    n = 20
    u0 = rng.random(n) * (rng.random(n) < 0.6)
    tr = reg_evolve(u0, RegParams(c, 2e-3, 1 / n), 0.04)
    assert tr.snapshots.min() >= -1e-12
    e = tr.energies
    assert np.all(np.diff(e) <= 1e-10 * (1 + abs(e[0])))


def test_monotone_in_c():
    n = 64
    u0 = quadratic(cell_centers(n))
    rep = monotonicity_report(u0, [1e2, 1e3, 1e4], 1e-3, 0.05, 1 / n)
    assert rep.passed and rep.limit_ordered
    assert rep.limit_gaps[-1] < 1e-3


def test_monotone_report_trivial_cases():
    rep = monotonicity_report(np.ones(8), [10.0, 10.0], 0.1, 0.5, 1 / 8)
    assert rep.pair_gaps == (0.0,)
    rep = monotonicity_report(np.ones(8), [10.0, 100.0], 0.01, 0.5, 1 / 8)
    assert rep.pair_gaps == (0.0,)
    with pytest.raises(DomainError):
        monotonicity_report(np.ones(8), [10.0], 0.1, 0.5, 1 / 8)
    with pytest.raises(DomainError):
        monotonicity_report(np.ones(8), [100.0, 10.0], 0.1, 0.5, 1 / 8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_comparison_per_step(seed):
    rng = np.random.default_rng(seed)
    n = 16
    u_n = rng.random(n) * 0.2
    lo = reg_step(u_n, RegParams(50.0, 1e-2, 1 / n))
    hi = reg_step(u_n, RegParams(500.0, 1e-2, 1 / n))
    assert np.all(hi <= lo + 1e-12)
