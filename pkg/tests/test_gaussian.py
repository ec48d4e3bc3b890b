from __future__ import annotations

import math

import numpy as np
import pytest

from core.errors import DimensionMismatchError, NotPositiveDefiniteError, NotSymmetricError
from features.gaussian.services import cholesky, log_density, sample_mvn, validate_params
from oracles import random_spd


def test_validate_identity() -> None:
    params = validate_params([0, 0], np.eye(2))
    assert params.dim == 2
    assert np.array_equal(params.cov, np.eye(2))


def test_validate_rejects_indefinite() -> None:
    with pytest.raises(NotPositiveDefiniteError):
        validate_params([0, 0], [[1, 2], [2, 1]])


def test_validate_diagonal_three_dim() -> None:
    params = validate_params([0.2, 0.3, 0.1], np.diag([0.01, 0.04, 0.09]))
    assert params.dim == 3


def test_validate_symmetrizes_small_asymmetry() -> None:
    cov = np.array([[1.0, 0.3], [0.3 + 1e-12, 1.0]])
    params = validate_params([0, 0], cov)
    assert params.cov[0, 1] == params.cov[1, 0]


def test_validate_rejects_asymmetry() -> None:
    with pytest.raises(NotSymmetricError):
        validate_params([0, 0], [[1.0, 0.3], [0.2, 1.0]])


@pytest.mark.parametrize(
    'mean, cov',
    [
        ([0.5], [[1.0]]),
        ([0, 0, 0], np.eye(2)),
        ([0, 0], np.ones((2, 3))),
    ],
)
def test_validate_dimension_mismatch(mean, cov) -> None:
    with pytest.raises(DimensionMismatchError):
        validate_params(mean, cov)


def test_validate_rejects_semidefinite() -> None:
    with pytest.raises(NotPositiveDefiniteError):
        validate_params([0, 0], [[1.0, 1.0], [1.0, 1.0]])


def test_params_are_read_only() -> None:
    params = validate_params([0, 0], np.eye(2))
    with pytest.raises(ValueError):
        params.mean[0] = 1.0


def test_cholesky_identity() -> None:
    factor = cholesky(validate_params([0, 0], np.eye(2)))
    assert np.array_equal(factor.lower, np.eye(2))
    assert factor.log_det == 0.0


def test_cholesky_diagonal() -> None:
    factor = cholesky(validate_params([0, 0], [[4, 0], [0, 9]]))
    assert np.allclose(factor.lower, np.diag([2.0, 3.0]))
    assert factor.log_det == pytest.approx(math.log(36), rel=1e-12)


def test_cholesky_reconstructs_random_matrix() -> None:
    cov = random_spd(4, np.random.default_rng(3))
    params = validate_params(np.zeros(4), cov)
    factor = cholesky(params)
    assert np.max(np.abs(factor.lower @ factor.lower.T - params.cov)) < 1e-12 * np.max(np.abs(cov)) + 1e-15
    assert math.exp(factor.log_det) == pytest.approx(np.linalg.det(cov), rel=1e-10)
    assert np.all(np.diag(factor.lower) > 0)


def test_log_density_at_mode() -> None:
    assert log_density(validate_params([0, 0], np.eye(2)), [0, 0]) == pytest.approx(-math.log(2 * math.pi))
    assert log_density(validate_params([1, 1], np.eye(2)), [1, 1]) == pytest.approx(-math.log(2 * math.pi))


def test_log_density_matches_explicit_inverse() -> None:
    rng = np.random.default_rng(11)
    cov = random_spd(3, rng)
    mean = rng.random(3)
    x = rng.random(3)
    params = validate_params(mean, cov)
    d = x - mean
    expected = -0.5 * (3 * math.log(2 * math.pi) + math.log(np.linalg.det(cov)) + d @ np.linalg.inv(cov) @ d)
    assert log_density(params, x) == pytest.approx(expected, rel=1e-10)


def test_log_density_permutation_invariant() -> None:
    rng = np.random.default_rng(5)
    params = validate_params(rng.random(4), random_spd(4, rng))
    x = rng.random(4)
    order = [2, 0, 3, 1]
    assert log_density(params.permuted(order), x[order]) == pytest.approx(log_density(params, x), rel=1e-12)


def test_log_density_dimension_check() -> None:
    with pytest.raises(DimensionMismatchError):
        log_density(validate_params([0, 0], np.eye(2)), [0, 0, 0])


def test_sample_mean_identity() -> None:
    factor = cholesky(validate_params([0, 0], np.eye(2)))
    x = sample_mvn(factor, [0, 0], np.random.default_rng(0), 100_000)
    assert x.shape == (100_000, 2)
    assert np.all(np.abs(x.mean(axis=0)) < 0.02)


def test_sample_variances_diagonal() -> None:
    factor = cholesky(validate_params([0, 0], [[4, 0], [0, 9]]))
    x = sample_mvn(factor, [0, 0], np.random.default_rng(1), 100_000)
    assert np.allclose(x.var(axis=0), [4, 9], rtol=0.05)


@pytest.mark.parametrize('rho', [-0.5, 0.0, 0.5])
def test_sample_correlation(rho: float) -> None:
    factor = cholesky(validate_params([0, 0], [[1, rho], [rho, 1]]))
    x = sample_mvn(factor, [0, 0], np.random.default_rng(2), 100_000)
    assert np.corrcoef(x.T)[0, 1] == pytest.approx(rho, abs=0.02)


def test_sample_deterministic() -> None:
    factor = cholesky(validate_params([0.1, 0.2], [[1, 0.2], [0.2, 1]]))
    a = sample_mvn(factor, [0.1, 0.2], np.random.default_rng(42), 50)
    b = sample_mvn(factor, [0.1, 0.2], np.random.default_rng(42), 50)
    assert np.array_equal(a, b)
