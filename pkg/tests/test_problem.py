import numpy as np
import pytest

from aipp_minmax.core import InvalidCurvature, MinMaxProblem, OracleTally, SetSpec, Unsupported, check_invariants


def _toy(m: float = 1.0, L_x: float = 1.0, **overrides) -> MinMaxProblem:
    """Phi(x, y) = -x^2/2 + x*y on [0, 1] x [0, 1]."""
    box = SetSpec.box(0.0, 1.0)
    params = dict(
        phi_value=lambda x, y: float(-0.5 * x @ x + x @ y),
        grad_x_phi=lambda x, y: -x + y,
        h_resolvent=lambda lam, x: box.project(x),
        y_resolvent=lambda lam, x, y0: box.project(y0 + lam * x),
        h_value=box.indicator,
        m=m,
        L_x=L_x,
        L_y=1.0,
        D_y=1.0,
        dims=(1, 1),
        x_set=box,
        y_set=box,
    )
    params.update(overrides)
    return MinMaxProblem(**params)


def test_curvature_validation():
    with pytest.raises(InvalidCurvature):
        _toy(m=0.0)
    with pytest.raises(InvalidCurvature):
        _toy(m=2.0, L_x=1.0)
    with pytest.raises(ValueError):
        _toy(D_y=-1.0)


def test_counted_copies_tally_oracles():
    problem = _toy()
    counted, tally = problem.counted()
    x, y = np.array([0.3]), np.array([0.2])
    counted.phi_value(x, y)
    counted.grad_x_phi(x, y)
    counted.grad_x_phi(x, y)
    counted.y_resolvent(1.0, x, y)
    assert tally.counts == {"phi": 1, "grad_x": 2, "y_resolvent": 1}
    assert tally.total == 4
    # the original problem is untouched
    problem.phi_value(x, y)
    assert tally.total == 4


def test_tally_wrap_counts_under_name():
    tally = OracleTally()
    f = tally.wrap("f", lambda v: v + 1)
    assert f(1) == 2 and f(2) == 3
    assert tally.as_dict() == {"f": 2}


def test_require_grad_y():
    with pytest.raises(Unsupported):
        _toy().require_grad_y()
    problem = _toy(grad_y_phi=lambda x, y: x.copy())
    np.testing.assert_allclose(problem.require_grad_y()(np.array([0.4]), np.array([0.0])), [0.4])


def test_set_spec_membership_and_diameter(rng):
    simplex, box, free = SetSpec.simplex(), SetSpec.box(-1.0, 2.0), SetSpec.free()
    assert simplex.contains(simplex.sample(rng, 5))
    assert not simplex.contains(np.array([0.5, 0.6]))
    assert box.contains(box.sample(rng, 4))
    assert box.indicator(np.array([3.0])) == np.inf
    assert free.indicator(np.array([1e300])) == 0.0
    assert simplex.diameter(3) == pytest.approx(np.sqrt(2.0))
    assert simplex.diameter(1) == 0.0
    assert box.diameter(4) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        SetSpec.box(1.0, 0.0)


def test_check_invariants_accepts_valid_constants(rng):
    report = check_invariants(_toy(), rng, samples=100)
    assert report.ok
    assert report.samples == 100


def test_check_invariants_flags_understated_lipschitz(rng):
    problem = _toy(
        phi_value=lambda x, y: float(-2.0 * x @ x),
        grad_x_phi=lambda x, y: -4.0 * x,
        m=1.0,
        L_x=1.0,
    )
    report = check_invariants(problem, rng, samples=100)
    assert not report.ok
    assert report.lipschitz_excess > 0
    assert report.curvature_excess > 0
