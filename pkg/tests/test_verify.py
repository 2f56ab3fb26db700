import numpy as np
import pytest

from freebound.linalg import cell_centers
from freebound.presets import nonmonotone, quadratic
from freebound.verify import compare_methods, contraction_check, transfer


def test_transfer_reproduces_smooth_profile():
    S = 0.8
    N = 64
    x_m = (np.arange(N) + 0.5) / N * S
    f = lambda x: np.where(x < S, (S**2 - x**2) ** 2, 0.0)  # flat at 0, double zero at S
    x = cell_centers(100, 1.2)
    assert np.max(np.abs(transfer(x_m, f(x_m), S, x) - f(x))) < 1e-6


def test_compare_degenerate_run():
    c = compare_methods(lambda x: np.zeros_like(x), 16, 1e-2, 0.1, length=1.0)
    assert c.truncated and c.field_gap == 0.0


def test_compare_quadratic_gap_shrinks():
    a = compare_methods(quadratic, 64, 2e-4, 0.02, length=1.0, workers=1)
    b = compare_methods(quadratic, 128, 1e-4, 0.02, length=1.0, workers=1)
    assert a.field_gap <= 5e-2 and a.field_gap / b.field_gap >= 1.8
    assert b.front_gap < 2 / 128


def test_compare_nonmonotone_front_shape():
    c = compare_methods(nonmonotone, 64, 1e-3, 0.2)
    i, j = np.argmax(c.mapped_S), np.argmax(c.fixed_S)
    assert 0 < i < len(c.mapped_S) - 1 and 0 < j < len(c.fixed_S) - 1
    assert abs(c.times[i] - c.times[j]) < 0.02
    assert c.front_gap < 0.02


def test_contraction_identical():
    u = quadratic(cell_centers(32))
    r = contraction_check(u, u, 1 / 32, 1e-3, 0.05)
    assert r.lhs == 0 and r.passed


def test_contraction_uniform_shift():
    u = np.full(16, 0.5)
    r = contraction_check(u, u + 0.1, 1 / 16, 0.01, 0.8)
    assert r.rhs == pytest.approx(0.1)
    assert r.lhs <= 0.1 + 1e-12 and r.passed


def test_contraction_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = rng.random(32) * (rng.random(32) < 0.5)
        b = rng.random(32) * (rng.random(32) < 0.5)
        assert contraction_check(a, b, 1 / 32, 1e-3, 0.05).passed
