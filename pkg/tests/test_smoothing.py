import math

import numpy as np
import pytest

from aipp_minmax.core import SetSpec, check_invariants
from aipp_minmax.smoothing import SmoothedObjective, smoothed_curvature_bound, smoothing_constants


def _grid_max(g: np.ndarray, xi: float, steps: int = 300) -> float:
    best = -np.inf
    for i in range(steps + 1):
        for j in range(steps + 1 - i):
            y = np.array([i, j, steps - i - j], dtype=float) / steps
            best = max(best, float(y @ g - y @ y / (2.0 * xi)))
    return best


def test_constants_formula(small_qvm):
    problem = small_qvm.problem
    q_xi, l_xi = smoothing_constants(problem, 2.0)
    assert q_xi == pytest.approx(2.0 * problem.L_y + math.sqrt(2.0 * (problem.L_x + problem.m)))
    assert l_xi == pytest.approx(problem.L_y * q_xi + problem.L_x)
    assert l_xi <= smoothed_curvature_bound(problem, 2.0) * (1 + 1e-12)
    with pytest.raises(ValueError):
        smoothing_constants(problem, 0.0)


def test_y_xi_matches_grid_maximization(small_qvm, rng):
    smoothed = SmoothedObjective.with_zero_anchor(small_qvm.problem, 1.0)
    for _ in range(3):
        x = rng.dirichlet(np.ones(small_qvm.n))
        g = small_qvm.g(x)
        y = smoothed.y_xi(x)
        assert SetSpec.simplex().contains(y)
        value = float(y @ g - y @ y / 2.0)
        grid = _grid_max(g, 1.0)
        # y_xi is the exact maximizer, so it can only beat the grid, and by little
        assert value >= grid - 1e-12
        assert value - grid <= 1e-4 * max(1.0, abs(grid))
        assert smoothed.p_xi_value(x) == pytest.approx(value, rel=1e-12, abs=1e-12)


def test_sandwich_bound(small_qvm, rng):
    problem = small_qvm.problem
    xi = 0.5
    smoothed = SmoothedObjective.with_zero_anchor(problem, xi)
    for _ in range(100):
        x = rng.dirichlet(np.ones(small_qvm.n))
        p = small_qvm.max_value(x)
        p_xi = smoothed.p_xi_value(x)
        assert p_xi <= p + 1e-9 * max(1.0, abs(p))
        assert p_xi >= p - problem.D_y**2 / (2.0 * xi) - 1e-9 * max(1.0, abs(p))
        lower, upper = smoothed.sandwich_gap(x, p)
        assert lower >= -1e-9 * max(1.0, abs(p)) and upper >= -1e-9 * max(1.0, abs(p))


def test_gradient_matches_central_differences(small_qvm, rng):
    smoothed = SmoothedObjective.with_zero_anchor(small_qvm.problem, 1.0)
    h = 1e-5
    for _ in range(5):
        x = rng.dirichlet(np.ones(small_qvm.n))
        grad = smoothed.grad_p_xi(x)
        d = rng.standard_normal(small_qvm.n)
        d /= np.linalg.norm(d)
        fd = (smoothed.p_xi_value(x + h * d) - smoothed.p_xi_value(x - h * d)) / (2.0 * h)
        assert fd == pytest.approx(float(grad @ d), rel=1e-5, abs=1e-5 * max(1.0, float(np.linalg.norm(grad))))


def test_value_and_grad_consistent(small_qvm):
    smoothed = SmoothedObjective.with_zero_anchor(small_qvm.problem, 3.0)
    x = small_qvm.default_start()
    value, grad, y = smoothed.value_and_grad(x)
    assert value == pytest.approx(smoothed.p_xi_value(x))
    np.testing.assert_allclose(grad, smoothed.grad_p_xi(x))
    y_bar, v_bar = smoothed.dual_residual(x)
    np.testing.assert_allclose(y, y_bar)
    np.testing.assert_allclose(v_bar, -y_bar / 3.0)


def test_value_and_gradient_share_one_resolvent_call(small_qvm):
    counted, tally = small_qvm.problem.counted()
    smoothed = SmoothedObjective.with_zero_anchor(counted, 3.0)
    reference = SmoothedObjective.with_zero_anchor(small_qvm.problem, 3.0)
    x = small_qvm.default_start()
    value = smoothed.p_xi_value(x)
    grad = smoothed.grad_p_xi(x)
    assert tally.counts["y_resolvent"] == 1
    ref_value, ref_grad, _ = reference.value_and_grad(x)
    assert value == pytest.approx(ref_value)
    np.testing.assert_allclose(grad, ref_grad)
    # a new point, and the old one mutated in place, both miss the cache
    smoothed.grad_p_xi(x + 0.01)
    assert tally.counts["y_resolvent"] == 2
    x[0] += 0.01
    smoothed.p_xi_value(x)
    assert tally.counts["y_resolvent"] == 3


def test_smoothed_secant_and_weak_convexity(small_qvm, rng):
    problem = small_qvm.problem
    smoothed = SmoothedObjective.with_zero_anchor(problem, 2.0)
    for _ in range(300):
        x = rng.dirichlet(np.ones(small_qvm.n))
        xp = rng.dirichlet(np.ones(small_qvm.n))
        dist = float(np.linalg.norm(x - xp))
        gx, gxp = smoothed.grad_p_xi(x), smoothed.grad_p_xi(xp)
        assert float(np.linalg.norm(gx - gxp)) <= smoothed.L_xi * dist + 1e-8
        lower = smoothed.p_xi_value(x) - smoothed.p_xi_value(xp) - float(gxp @ (x - xp))
        assert lower >= -problem.m / 2.0 * dist**2 - 1e-8


def test_anchor_shape_checked(small_qvm):
    with pytest.raises(ValueError):
        SmoothedObjective(small_qvm.problem, 1.0, np.zeros(small_qvm.k + 1))


def test_qvm_problem_invariants(small_qvm, rng):
    assert check_invariants(small_qvm.problem, rng, samples=200).ok
