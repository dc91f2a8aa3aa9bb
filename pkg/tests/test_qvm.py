import numpy as np
import pytest
from scipy.optimize import linprog

from aipp_minmax.core import CalibrationError, DimensionError, SetSpec
from aipp_minmax.problems import calibrate, qvm_constraint, qvm_generate
from aipp_minmax.problems.qvm import _sparse_uniform


def test_calibration_hits_curvature_targets():
    instance = qvm_generate(n=6, l=2, k=2, M_target=10.0, m_target=1.0, density=0.5, seed=11)
    for lo, hi in instance.hessian_spectrum():
        assert hi == pytest.approx(10.0, rel=0.01)
        assert lo == pytest.approx(-1.0, rel=0.01)
    m, L_x = instance.curvature
    assert instance.problem.m == m and instance.problem.L_x == L_x
    assert m == pytest.approx(1.0, rel=0.01)
    assert L_x == pytest.approx(10.0, rel=0.01)


def test_calibrate_on_diagonal_matrices():
    G = np.diag([1.0, 0.0])
    K = np.diag([0.0, 1.0])
    alpha, beta = calibrate(G, K, 5.0, 2.0)
    assert alpha == pytest.approx(5.0, rel=1e-6)
    assert beta == pytest.approx(2.0, rel=1e-6)


def test_calibrate_fails_without_negative_direction():
    with pytest.raises(CalibrationError):
        calibrate(np.eye(2), np.zeros((2, 2)), 5.0, 1.0)


def test_generation_is_seeded():
    a = qvm_generate(8, 3, 2, 10.0, 1.0, density=0.3, seed=4)
    b = qvm_generate(8, 3, 2, 10.0, 1.0, density=0.3, seed=4)
    c = qvm_generate(8, 3, 2, 10.0, 1.0, density=0.3, seed=5)
    np.testing.assert_array_equal(a.Q, b.Q)
    np.testing.assert_array_equal(a.d, b.d)
    assert not np.array_equal(a.d, c.d)


def test_sparse_factors_have_no_empty_rows(rng, small_qvm):
    mat = _sparse_uniform(5, 40, 0.01, rng)
    assert mat.shape == (5, 40)
    assert np.all(np.diff(mat.indptr) >= 1)
    assert np.all((mat.data >= 0.0) & (mat.data <= 1.0))
    for Ci, Bi in zip(small_qvm.C, small_qvm.B, strict=True):
        assert np.all(np.diff(Ci.indptr) >= 1)
        assert np.all(np.diff(Bi.indptr) >= 1)
    assert np.all((small_qvm.D >= 1.0) & (small_qvm.D <= 1000.0))
    assert np.all((small_qvm.d >= 0.0) & (small_qvm.d <= 1.0))


def test_argument_validation():
    with pytest.raises(DimensionError):
        qvm_generate(0, 2, 2, 10.0, 1.0)
    with pytest.raises(ValueError):
        qvm_generate(4, 2, 2, 1.0, 10.0)
    with pytest.raises(ValueError):
        qvm_generate(4, 2, 2, 10.0, 0.0)
    with pytest.raises(ValueError):
        qvm_generate(4, 2, 2, 10.0, 1.0, density=0.0)


def test_oracles(small_qvm, rng):
    problem = small_qvm.problem
    assert problem.dims == (small_qvm.n, small_qvm.k)
    assert problem.D_y == pytest.approx(np.sqrt(2.0))
    np.testing.assert_allclose(small_qvm.default_start(), np.full(small_qvm.n, 1.0 / small_qvm.n))
    x = rng.dirichlet(np.ones(small_qvm.n))
    y = rng.dirichlet(np.ones(small_qvm.k))
    # g_i from its factored definition
    for i in range(small_qvm.k):
        Ci = small_qvm.C[i].toarray()
        DBi = small_qvm.D[i][:, None] * small_qvm.B[i].toarray()
        direct = 0.5 * small_qvm.alpha[i] * np.sum((Ci @ x - small_qvm.d[i]) ** 2)
        direct -= 0.5 * small_qvm.beta[i] * np.sum((DBi @ x) ** 2)
        assert small_qvm.g(x)[i] == pytest.approx(direct, rel=1e-9, abs=1e-9)
    assert problem.phi_value(x, y) == pytest.approx(float(y @ small_qvm.g(x)))
    assert small_qvm.max_value(x) == pytest.approx(float(np.max(small_qvm.g(x))))
    h = 1e-3
    d = rng.standard_normal(small_qvm.n)
    fd = (problem.phi_value(x + h * d, y) - problem.phi_value(x - h * d, y)) / (2.0 * h)
    assert fd == pytest.approx(float(problem.grad_x_phi(x, y) @ d), rel=1e-6, abs=1e-6)
    assert SetSpec.simplex().contains(problem.y_resolvent(0.3, x, rng.standard_normal(small_qvm.k)))
    np.testing.assert_allclose(problem.require_grad_y()(x, y), small_qvm.g(x))


def test_single_block_has_zero_dual_diameter():
    assert SetSpec.simplex().diameter(1) == 0.0
    assert SetSpec.simplex().diameter(5) == pytest.approx(np.sqrt(2.0))


def test_random_constraint_is_feasible(small_qvm):
    con = qvm_constraint(small_qvm, 2, seed=3)
    assert con.matrix.shape == (2, small_qvm.n)
    again = qvm_constraint(small_qvm, 2, seed=3)
    np.testing.assert_array_equal(con.b, again.b)
    with pytest.raises(ValueError):
        qvm_constraint(small_qvm, 0)
    # some point of the simplex satisfies Ax = b
    n = small_qvm.n
    lp = linprog(
        np.zeros(n),
        A_eq=np.vstack([con.matrix, np.ones((1, n))]),
        b_eq=np.append(con.b, 1.0),
        bounds=[(0.0, None)] * n,
    )
    assert lp.status == 0
    assert con.violation(lp.x) < 1e-7
