from __future__ import annotations

import math

import numpy as np
import pytest

from core.errors import (
    DegenerateEllipseError,
    EmptyArcSetError,
    InfeasibleStartError,
    NegativeShiftError,
    ValidationError,
)
from core.services.sample_statistics import sample_moments
from features.gaussian.services import cholesky, validate_params
from features.liness.services import (
    ArcSet,
    LinearConstraints,
    active_arcs,
    constraint_intersections,
    ellipse_point,
    initial_point,
    liness_step,
    sample_liness,
    shifted_constraints,
    simplex_constraints,
)
from oracles import triangle_moments


def test_simplex_constraints_two_dim() -> None:
    constraints = simplex_constraints(validate_params([0.3, 0.4], np.eye(2)))
    assert np.array_equal(constraints.a_matrix, [[-1, -1], [1, 0], [0, 1]])
    assert np.allclose(constraints.c_vector, [0.3, 0.3, 0.4], atol=1e-15)


def test_simplex_constraints_zero_mean() -> None:
    constraints = simplex_constraints(validate_params([0.0, 0.0], np.eye(2)))
    assert np.array_equal(constraints.c_vector, [1.0, 0.0, 0.0])


def test_simplex_constraints_three_dim() -> None:
    constraints = simplex_constraints(validate_params([0.1, 0.2, 0.3], np.eye(3)))
    assert constraints.a_matrix.shape == (4, 3)
    assert np.allclose(constraints.c_vector, [0.4, 0.1, 0.2, 0.3])


def test_constraints_validation() -> None:
    with pytest.raises(ValidationError):
        LinearConstraints([[0.0, 0.0]], [1.0])
    with pytest.raises(ValidationError):
        LinearConstraints([[1.0, 0.0]], [1.0, 2.0])


def test_shift_zero_is_identity() -> None:
    base = simplex_constraints(validate_params([0.3, 0.4], np.eye(2)))
    assert shifted_constraints(base, 0.0) is base


def test_shift_loosens_offsets() -> None:
    base = simplex_constraints(validate_params([0.3, 0.4], np.eye(2)))
    assert np.allclose(shifted_constraints(base, 0.5).c_vector, [0.8, 0.8, 0.9])


def test_shift_negative_rejected() -> None:
    base = simplex_constraints(validate_params([0.3, 0.4], np.eye(2)))
    with pytest.raises(NegativeShiftError):
        shifted_constraints(base, -0.1)


def test_large_shift_contains_centroid() -> None:
    params = validate_params([2.0, -3.0, 0.5], np.eye(3))
    loose = shifted_constraints(simplex_constraints(params), 10.0)
    assert np.all(loose.margins(initial_point(params)) > 0)


@pytest.mark.parametrize(
    'mean',
    [[0.3, 0.4], [0.1, 0.2, 0.3], [0.1] * 10],
)
def test_initial_point_margins(mean) -> None:
    n = len(mean)
    params = validate_params(mean, np.eye(n))
    margins = simplex_constraints(params).margins(initial_point(params))
    assert np.allclose(margins, 1.0 / (n + 1), atol=1e-14)


def test_ellipse_point() -> None:
    y_t = np.array([0.3, -0.2])
    nu = np.array([0.1, 0.5])
    assert np.allclose(ellipse_point(y_t, nu, 0.0), y_t)
    assert np.allclose(ellipse_point(y_t, nu, math.pi / 2), nu)
    assert np.allclose(ellipse_point(y_t, nu, math.pi), -y_t)


def test_intersections_two_angles() -> None:
    angles = constraint_intersections([1.0, 0.0], 0.0, [1.0, 0.0], [0.0, 1.0])
    assert angles == pytest.approx([math.pi / 2, 3 * math.pi / 2], abs=1e-15)


def test_intersections_none() -> None:
    assert constraint_intersections([1.0, 0.0], 2.0, [1.0, 0.0], [0.0, 1.0]) == []


def test_intersections_tangent() -> None:
    angles = constraint_intersections([1.0, 0.0], -1.0, [1.0, 0.0], [0.0, 1.0])
    assert angles == pytest.approx([0.0], abs=1e-15)


def test_intersections_degenerate() -> None:
    with pytest.raises(DegenerateEllipseError):
        constraint_intersections([0.0, 1.0], 0.0, [1.0, 0.0], [2.0, 0.0])


def test_intersections_residuals_random() -> None:
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(2000):
        n = int(rng.integers(2, 6))
        a_row = rng.standard_normal(n)
        y_t = rng.standard_normal(n)
        nu = rng.standard_normal(n)
        c_i = float(rng.uniform(-2.0, 2.0))
        for theta in constraint_intersections(a_row, c_i, y_t, nu):
            assert 0.0 <= theta < 2 * math.pi
            assert abs(a_row @ ellipse_point(y_t, nu, theta) + c_i) < 1e-9
            checked += 1
    assert checked > 1000


def test_arcs_whole_ellipse() -> None:
    constraints = LinearConstraints([[1.0, 0.0], [0.0, 1.0]], [5.0, 5.0])
    arcs = active_arcs(constraints, [1.0, 0.0], [0.0, 1.0])
    assert arcs == ArcSet.full()
    assert arcs.total_measure == pytest.approx(2 * math.pi)


def test_arcs_two_disjoint_pieces() -> None:
    # |y_2| <= 1/2 on the unit circle keeps two arcs around theta = 0 and pi
    constraints = LinearConstraints([[0.0, 1.0], [0.0, -1.0]], [0.5, 0.5])
    arcs = active_arcs(constraints, [1.0, 0.0], [0.0, 1.0])
    assert len(arcs.intervals) == 2
    for lo, hi in arcs.intervals:
        assert hi - lo == pytest.approx(math.pi / 3, abs=1e-12)
    assert arcs.contains(0.0)
    assert arcs.contains(math.pi)
    assert not arcs.contains(math.pi / 2)


def test_arcs_match_direct_evaluation() -> None:
    rng = np.random.default_rng(8)
    grid = 2 * math.pi * np.arange(10_000) / 10_000
    for _ in range(20):
        y_t = rng.standard_normal(2)
        nu = rng.standard_normal(2)
        a = rng.standard_normal((3, 2))
        c = -a @ y_t + rng.uniform(0.1, 1.0, size=3)
        constraints = LinearConstraints(a, c)
        arcs = active_arcs(constraints, y_t, nu)
        points = np.outer(np.cos(grid), y_t) + np.outer(np.sin(grid), nu)
        direct = np.all(constraints.margins(points) >= 0.0, axis=1)
        members = np.array([arcs.contains(theta) for theta in grid])
        assert np.array_equal(members, direct)


def test_arcs_empty_when_start_outside() -> None:
    constraints = LinearConstraints([[1.0, 0.0], [-1.0, 0.0]], [-0.5, -0.5])
    with pytest.raises(EmptyArcSetError):
        active_arcs(constraints, [1.0, 0.0], [0.0, 1.0])


def test_arc_inverse_cdf() -> None:
    arcs = ArcSet(((0.0, 1.0), (2.0, 4.0)))
    assert arcs.total_measure == 3.0
    assert arcs.angle_at(0.0) == 0.0
    assert arcs.angle_at(0.5) == pytest.approx(2.5)
    assert arcs.angle_at(1.0) < 4.0


def test_step_stays_inside() -> None:
    params = validate_params([0.3, 0.4, 0.1], np.diag([0.2, 0.3, 0.1]))
    constraints = simplex_constraints(params)
    factor = cholesky(params)
    rng = np.random.default_rng(0)
    y = initial_point(params)
    for _ in range(500):
        y = liness_step(constraints, factor, y, rng)
        assert np.all(constraints.margins(y) >= -1e-9)


def test_step_deterministic() -> None:
    params = validate_params([0.3, 0.4], 0.05 * np.eye(2))
    constraints = simplex_constraints(params)
    factor = cholesky(params)
    y0 = initial_point(params)
    a = liness_step(constraints, factor, y0, np.random.default_rng(5))
    b = liness_step(constraints, factor, y0, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_tiny_covariance_chain() -> None:
    params = validate_params([0.3, 0.3], 1e-10 * np.eye(2))
    constraints = simplex_constraints(params)
    y0 = initial_point(params)
    ys = sample_liness(constraints, cholesky(params), y0, 1000, rng=np.random.default_rng(1))
    assert np.all(constraints.margins(ys) >= -1e-9)


def test_sample_count_and_feasibility() -> None:
    params = validate_params([0.2, 0.5], [[0.05, 0.01], [0.01, 0.08]])
    constraints = simplex_constraints(params)
    ys = sample_liness(constraints, cholesky(params), initial_point(params), 100, thin=2, rng=np.random.default_rng(2))
    assert ys.shape == (100, 2)
    assert np.all(constraints.margins(ys) >= -1e-9)


def test_consecutive_states() -> None:
    params = validate_params([0.2, 0.5], 0.05 * np.eye(2))
    constraints = simplex_constraints(params)
    ys = sample_liness(constraints, cholesky(params), initial_point(params), 2, thin=1, rng=np.random.default_rng(3))
    assert ys.shape == (2, 2)
    assert not np.array_equal(ys[0], ys[1])


def test_sample_deterministic() -> None:
    params = validate_params([0.2, 0.5], 0.05 * np.eye(2))
    constraints = simplex_constraints(params)
    factor = cholesky(params)
    a = sample_liness(constraints, factor, initial_point(params), 50, burn_in=10, rng=np.random.default_rng(6))
    b = sample_liness(constraints, factor, initial_point(params), 50, burn_in=10, rng=np.random.default_rng(6))
    assert np.array_equal(a, b)


def test_infeasible_start() -> None:
    params = validate_params([0.2, 0.5], 0.05 * np.eye(2))
    with pytest.raises(InfeasibleStartError):
        sample_liness(simplex_constraints(params), cholesky(params), [-0.2, -0.5], 10)


def test_invalid_chain_settings() -> None:
    params = validate_params([0.2, 0.5], 0.05 * np.eye(2))
    with pytest.raises(ValidationError):
        sample_liness(simplex_constraints(params), cholesky(params), initial_point(params), 10, thin=0)


def test_chain_mean_matches_quadrature() -> None:
    mean = [0.3, 0.3]
    cov = 0.04 * np.eye(2)
    _, mean_t, _ = triangle_moments(mean, cov)
    params = validate_params(mean, cov)
    ys = sample_liness(
        simplex_constraints(params),
        cholesky(params),
        initial_point(params),
        10_000,
        thin=2,
        burn_in=100,
        rng=np.random.default_rng(12),
    )
    moments = sample_moments(ys + params.mean, correlated=True)
    assert np.all(np.abs(moments.mean - mean_t) <= 4 * moments.mean_se)


def test_chain_without_active_constraints_targets_prior() -> None:
    cov = np.array([[0.5, 0.2, -0.1], [0.2, 0.3, 0.05], [-0.1, 0.05, 0.4]])
    params = validate_params([0.2, 0.3, 0.1], cov)
    far = shifted_constraints(simplex_constraints(params), 1e6)
    ys = sample_liness(far, cholesky(params), initial_point(params), 100_000, rng=np.random.default_rng(21))
    moments = sample_moments(ys, correlated=True)
    assert np.all(np.abs(moments.mean) <= 4 * moments.mean_se)
    assert np.all(np.abs(moments.cov - cov) <= 4 * moments.cov_se)
