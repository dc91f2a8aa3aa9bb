import numpy as np
import pytest

from aipp_minmax.core import Divergence, MinMaxProblem, SetSpec, Termination, TimeLimitExceeded
from aipp_minmax.problems import qvm_constraint, qvm_generate
from aipp_minmax.smoothing import SmoothedObjective
from aipp_minmax.solvers import qp_aipp
from aipp_minmax.solvers.aipp import AippConfig
from aipp_minmax.solvers.aipp_s import relative_scale, smoothing_parameter
from aipp_minmax.solvers.qp_aipp import LinearConstraint, penalty_saddle_value, qp_aipp_s_solve, qp_aipp_solve
from aipp_minmax.solvers.raipp import RaippConfig

UNIT = SetSpec.box(0.0, 1.0)
ROW = np.array([[1.0, 1.0]])


def _box_oracles(f, grad):
    return f, grad, UNIT.indicator, lambda lam, x: UNIT.project(x)


def test_constraint_from_matrix(rng):
    A = rng.standard_normal((3, 6))
    con = LinearConstraint.from_matrix(A, np.ones(3), tol=1e-12)
    assert con.norm_A == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)
    assert con.check_adjoint(rng, 6) <= 1e-12
    x = rng.standard_normal(6)
    np.testing.assert_allclose(con.residual(x), A @ x - 1.0)
    assert con.violation(x) == pytest.approx(float(np.linalg.norm(A @ x - 1.0)))
    with pytest.raises(ValueError):
        LinearConstraint.from_matrix(np.zeros((2, 2)), np.zeros(2))


def test_feasible_segment_toy():
    con = LinearConstraint.from_matrix(ROW, np.array([1.0]))
    rho, eta = 1e-4, 1e-3
    f, grad, h, res = _box_oracles(lambda x: 0.0, lambda x: np.zeros_like(x))
    x_bar, u_bar, r_bar, report = qp_aipp_solve(f, grad, h, res, 1.0, 1.0, con, np.array([0.9, 0.6]), rho, eta)
    assert report.termination is Termination.CONVERGED
    assert con.violation(x_bar) <= eta
    assert float(np.linalg.norm(u_bar)) <= rho
    assert UNIT.contains(x_bar)
    np.testing.assert_allclose(r_bar, report.penalty_c_final * (ROW @ x_bar - 1.0), rtol=0, atol=1e-10)
    # u_bar - A* r_bar lies in the normal cone of the box
    assert UNIT.normal_cone_distance(x_bar, ROW.T @ r_bar - u_bar) <= 1e-10
    # distance to the exact feasible segment {x1 + x2 = 1} within the box
    t = np.clip(x_bar[0] - 0.5 * (x_bar.sum() - 1.0), 0.0, 1.0)
    assert float(np.linalg.norm(x_bar - np.array([t, 1.0 - t]))) <= eta


@pytest.mark.parametrize("warm_start", [True, False])
def test_penalty_doubles_until_feasible(warm_start):
    con = LinearConstraint.from_matrix(ROW, np.array([1.0]), tol=1e-14)
    f, grad, h, res = _box_oracles(lambda x: -float(x.sum()), lambda x: -np.ones_like(x))
    x_bar, _, r_bar, report = qp_aipp_solve(
        f, grad, h, res, 1.0, 1.0, con, np.array([0.5, 0.5]), 1e-6, 1e-3, warm_start=warm_start
    )
    c0 = 1.0 / con.norm_A**2
    # minimizers of the penalized problem sit at x1 + x2 = 1 + 1/c
    assert report.penalty_trace == [c0 * 2.0**i for i in range(12)]
    assert len(report.feasibility_trace) == 12
    assert all(v > 1e-3 for v in report.feasibility_trace[:-1])
    assert report.feasibility_trace[-1] <= 1e-3
    assert report.penalty_c_final == report.penalty_trace[-1]
    np.testing.assert_allclose(r_bar, report.penalty_c_final * (ROW @ x_bar - 1.0), atol=1e-10)


def test_hat_c_shifts_the_initial_penalty():
    con = LinearConstraint.from_matrix(ROW, np.array([1.0]), tol=1e-14)
    f, grad, h, res = _box_oracles(lambda x: 0.0, lambda x: np.zeros_like(x))
    _, _, _, report = qp_aipp_solve(f, grad, h, res, 1.0, 1.0, con, np.array([0.9, 0.6]), 1e-4, 1e-3, hat_c=3.0)
    assert report.penalty_trace[0] == pytest.approx(3.0 + 1.0 / con.norm_A**2)
    with pytest.raises(ValueError):
        qp_aipp_solve(f, grad, h, res, 1.0, 1.0, con, np.zeros(2), 1e-4, 1e-3, hat_c=-1.0)


def test_infeasible_constraint_diverges(monkeypatch):
    monkeypatch.setattr(qp_aipp, "MAX_DOUBLINGS", 2)
    con = LinearConstraint.from_matrix(ROW, np.array([5.0]))
    f, grad, h, res = _box_oracles(lambda x: 0.0, lambda x: np.zeros_like(x))
    with pytest.raises(Divergence):
        qp_aipp_solve(f, grad, h, res, 1.0, 1.0, con, np.array([0.5, 0.5]), 1e-4, 1e-3)


def test_settings_time_limit_covers_all_penalty_rounds(monkeypatch):
    monkeypatch.setenv("AIPP_MINMAX_TIME_LIMIT", "1e-9")
    con = LinearConstraint.from_matrix(ROW, np.array([1.0]), tol=1e-14)
    f, grad, h, res = _box_oracles(lambda x: -float(x.sum()), lambda x: -np.ones_like(x))
    with pytest.raises(TimeLimitExceeded) as info:
        qp_aipp_solve(f, grad, h, res, 1.0, 1.0, con, np.array([0.5, 0.5]), 1e-6, 1e-3)
    report = info.value.report
    assert report.termination is Termination.TIME_LIMIT
    # one deadline for the whole loop: the first round already runs out of time
    assert report.penalty_trace == pytest.approx([1.0 / con.norm_A**2])
    assert report.feasibility_trace == []
    assert report.penalty_c_final == pytest.approx(1.0 / con.norm_A**2)


def test_inner_method_and_config_must_match():
    con = LinearConstraint.from_matrix(ROW, np.array([1.0]))
    f, grad, h, res = _box_oracles(lambda x: 0.0, lambda x: np.zeros_like(x))
    x0 = np.array([0.9, 0.6])
    with pytest.raises(ValueError, match="RaippConfig"):
        qp_aipp_solve(f, grad, h, res, 1.0, 1.0, con, x0, 1e-4, 1e-3, inner="raipp", config=AippConfig(lam=0.25))
    with pytest.raises(ValueError, match="AippConfig"):
        qp_aipp_solve(f, grad, h, res, 1.0, 1.0, con, x0, 1e-4, 1e-3, inner="aipp", config=RaippConfig())


def _two_piece_problem():
    w = np.linspace(-1.0, 1.0, 5)
    simplex = SetSpec.simplex()

    def g(x):
        return np.array([0.5 * float(x @ x), -0.5 * float(np.sum((x - 1.0) ** 2)) + float(w @ x)])

    def grad_x(x, y):
        return y[0] * x + y[1] * (-(x - 1.0) + w)

    return MinMaxProblem(
        phi_value=lambda x, y: float(y @ g(x)),
        grad_x_phi=grad_x,
        h_resolvent=lambda lam, x: np.array(x, dtype=float),
        y_resolvent=lambda lam, x, y0: simplex.project(y0 + lam * g(x)),
        h_value=lambda x: 0.0,
        m=1.0,
        L_x=1.0,
        L_y=10.0,
        D_y=np.sqrt(2.0),
        dims=(5, 2),
        y_set=simplex,
    ), g


def test_penalty_saddle_form_matches_penalized_smoothing(rng):
    problem, g = _two_piece_problem()
    xi, c = 0.7, 3.0
    y0 = np.array([0.2, 0.8])
    A = rng.standard_normal((2, 5))
    con = LinearConstraint.from_matrix(A, rng.standard_normal(2))
    smoothed = SmoothedObjective(problem, xi, y0)
    ts = np.linspace(0.0, 1.0, 200_001)
    ys = np.stack([ts, 1.0 - ts], axis=1)

    def grid_max(x):
        vals = ys @ g(x) - np.sum((ys - y0) ** 2, axis=1) / (2.0 * xi)
        return float(vals.max())

    for _ in range(50):
        x = rng.standard_normal(5)
        saddle = penalty_saddle_value(grid_max, problem.h_value, con, c, x)
        direct = smoothed.p_xi_value(x) + problem.h_value(x) + 0.5 * c * con.violation(x) ** 2
        assert saddle == pytest.approx(direct, abs=1e-6)



def test_interrupted_constrained_solve_carries_a_certificate():
    problem, _ = _two_piece_problem()
    con = LinearConstraint.from_matrix(np.ones((1, 5)), np.array([1.0]))
    config = AippConfig(lam=0.25, time_limit=1e-9)
    with pytest.raises(TimeLimitExceeded) as info:
        qp_aipp_s_solve(problem, con, 1e-3, 1e-1, 1e-4, np.zeros(5), config=config)
    cert = info.value.certificate
    report = info.value.report
    assert cert is not None
    assert np.all(np.isnan(cert.u_bar))
    np.testing.assert_allclose(cert.x_bar, np.zeros(5))
    assert cert.y_bar.sum() == pytest.approx(1.0)
    assert np.isfinite(cert.norm_v)
    assert cert.feas_violation == pytest.approx(1.0)
    np.testing.assert_allclose(cert.r_bar, [-report.penalty_c_final])


@pytest.mark.slow
def test_constrained_qvm_quintuple():
    instance = qvm_generate(20, 10, 5, 10.0, 1.0, seed=1)
    con = qvm_constraint(instance, 2, seed=0)
    problem = instance.problem
    rho_x, rho_y, eta = 1e-2, 1e-1, 1e-3
    x0 = instance.default_start()
    cert, report = qp_aipp_s_solve(problem, con, rho_x, rho_y, eta, x0, relative=True)

    xi = smoothing_parameter(problem.D_y, rho_y)
    smoothed = SmoothedObjective.with_zero_anchor(problem, xi)
    assert cert.norm_u <= rho_x * relative_scale(smoothed, x0)
    assert cert.norm_v <= rho_y
    assert cert.feas_violation <= eta
    c_final = report.penalty_c_final
    np.testing.assert_allclose(cert.r_bar, c_final * con.residual(cert.x_bar), rtol=0, atol=1e-10 * max(1.0, c_final))
    c0 = smoothed.L_xi / con.norm_A**2
    assert report.penalty_trace == pytest.approx([c0 * 2.0**i for i in range(len(report.penalty_trace))], rel=1e-12)
    grad = problem.grad_x_phi(cert.x_bar, cert.y_bar) + con.matrix.T @ cert.r_bar
    assert problem.x_set.normal_cone_distance(cert.x_bar, grad - cert.u_bar) <= 1e-8 * max(1.0, float(np.linalg.norm(grad)))
