"""Validated Gaussian parameters and the dense linear algebra built on them"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from core.errors import (
    DimensionMismatchError,
    FactorizationFailedError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    ValidationError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-8
PD_TOL = 1e-10
LOG_2PI = math.log(2.0 * math.pi)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GaussianParams:
    """Mean vector and positive-definite covariance of a non-truncated normal"""
    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def permuted(self, order: Sequence[int]) -> "GaussianParams":
        """Same distribution with coordinates reordered as ``order``"""
        idx = np.asarray(order, dtype=int)
        return GaussianParams(_frozen(self.mean[idx]), _frozen(self.cov[np.ix_(idx, idx)]))


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower Cholesky factor L with L L^T = cov, and log|cov|"""
    lower: np.ndarray
    log_det: float

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])


def validate_params(mean, cov) -> GaussianParams:
    """
    Validate and freeze Gaussian parameters.

    Args:
        mean: Length-n vector, n >= 2
        cov: n x n covariance, symmetric to 1e-8 relative, strictly positive definite

    Returns:
        GaussianParams with an exactly symmetric covariance

    Raises:
        DimensionMismatchError, NotSymmetricError, NotPositiveDefiniteError
    """
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)

    if mean.ndim != 1 or mean.shape[0] < 2:
        raise DimensionMismatchError(f"validate_params: mean must be a vector of length >= 2, got shape {mean.shape}")
    n = mean.shape[0]
    if cov.shape != (n, n):
        raise DimensionMismatchError(f"validate_params: cov shape {cov.shape} does not match mean length {n}")
    if not np.all(np.isfinite(mean)):
        raise ValidationError("validate_params: mean has non-finite entries")
    if not np.all(np.isfinite(cov)):
        raise NotPositiveDefiniteError("validate_params: cov has non-finite entries")

    scale = float(np.max(np.abs(cov)))
    asymmetry = float(np.max(np.abs(cov - cov.T)))
    if asymmetry > SYMMETRY_TOL * scale:
        raise NotSymmetricError(f"validate_params: max asymmetry {asymmetry:.3e} exceeds {SYMMETRY_TOL:g} * {scale:.3e}")
    cov = 0.5 * (cov + cov.T)

    eig = np.linalg.eigvalsh(cov)
    if eig[-1] <= 0.0 or eig[0] <= PD_TOL * eig[-1]:
        raise NotPositiveDefiniteError(
            f"validate_params: eigenvalues span [{eig[0]:.3e}, {eig[-1]:.3e}], covariance is not positive definite"
        )

    return GaussianParams(_frozen(mean), _frozen(cov))


def cholesky(params: GaussianParams) -> CholeskyFactor:
    """Lower Cholesky factor of params.cov"""
    try:
        lower = linalg.cholesky(params.cov, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise FactorizationFailedError(f"cholesky: factorization failed for dim {params.dim}: {e}") from e
    diag = np.diag(lower)
    if np.any(diag <= 0.0) or not np.all(np.isfinite(lower)):
        raise FactorizationFailedError(f"cholesky: non-positive pivot {float(np.min(diag)):.3e}")
    return CholeskyFactor(lower=_frozen(lower), log_det=float(2.0 * np.sum(np.log(diag))))


def log_density(params: GaussianParams, x, factor: CholeskyFactor = None) -> float:
    """
    Natural log of the normal density at x, through a triangular solve.

    Args:
        params: Distribution parameters
        x: Point of length params.dim
        factor: Precomputed Cholesky factor of params.cov (optional)
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.dim,):
        raise DimensionMismatchError(f"log_density: point shape {x.shape} does not match dim {params.dim}")
    if factor is None:
        factor = cholesky(params)
    z = linalg.solve_triangular(factor.lower, x - params.mean, lower=True, check_finite=False)
    return float(-0.5 * (params.dim * LOG_2PI + factor.log_det + z @ z))


def sample_mvn(factor: CholeskyFactor, mean, rng: np.random.Generator, count: int) -> np.ndarray:
    """
    Draw ``count`` samples x = mean + L z with z standard normal.

    Returns:
        (count, n) array; row order follows the consumption order of ``rng``
    """
    mean = np.asarray(mean, dtype=np.float64)
    if mean.shape != (factor.dim,):
        raise DimensionMismatchError(f"sample_mvn: mean shape {mean.shape} does not match factor dim {factor.dim}")
    if count < 1:
        raise ValidationError(f"sample_mvn: count must be >= 1, got {count}")
    z = rng.standard_normal((count, factor.dim))
    return mean + z @ factor.lower.T
