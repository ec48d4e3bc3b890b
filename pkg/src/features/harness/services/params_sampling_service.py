"""Random simplex-truncated normal parameters for the comparison experiment"""

import logging

import numpy as np

from core.errors import SamplingStalledError, ValidationError
from features.gaussian.services import GaussianParams, validate_params

logger = logging.getLogger(__name__)

MAX_VARIANCE = 0.25
RHO_RANGE = (-0.5, 0.5)
MAX_COV_REJECTIONS = 1_000_000
# candidate means drawn per block while rejecting sum(mean) > 1
MEAN_BLOCK = 65_536


def _sample_mean(n: int, rng: np.random.Generator) -> np.ndarray:
    """Coordinate-wise U(0, 1), resampled until sum <= 1"""
    while True:
        block = rng.random((MEAN_BLOCK, n))
        ok = np.flatnonzero(block.sum(axis=1) <= 1.0)
        if ok.size:
            return block[ok[0]]


def _sample_cov(n: int, rng: np.random.Generator) -> np.ndarray:
    var = rng.uniform(0.0, MAX_VARIANCE, n)
    rho = np.eye(n)
    iu = np.triu_indices(n, 1)
    rho[iu] = rng.uniform(RHO_RANGE[0], RHO_RANGE[1], len(iu[0]))
    rho.T[iu] = rho[iu]
    sd = np.sqrt(var)
    return rho * np.outer(sd, sd)


def sample_experiment_params(n: int, rng: np.random.Generator, max_rejections: int = MAX_COV_REJECTIONS) -> GaussianParams:
    """
    Mean uniform on the region under the simplex, variances U(0, 0.25), correlations U(-0.5, 0.5).

    A covariance with a negative eigenvalue, or one that fails strict
    validation, is discarded and redrawn as a whole.

    Raises:
        SamplingStalledError: more than ``max_rejections`` covariances in a row were discarded
    """
    if n < 2:
        raise ValidationError(f"sample_experiment_params: n must be >= 2, got {n}")
    mean = _sample_mean(n, rng)
    for attempt in range(max_rejections + 1):
        cov = _sample_cov(n, rng)
        if np.linalg.eigvalsh(cov)[0] < 0.0:
            continue
        try:
            return validate_params(mean, cov)
        except ValidationError:
            continue
    raise SamplingStalledError(
        f"sample_experiment_params: {max_rejections} consecutive covariance rejections at n={n}"
    )
