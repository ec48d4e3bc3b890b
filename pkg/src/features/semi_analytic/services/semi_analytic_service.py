"""Z, mean and covariance of the simplex-truncated normal without sampling.

The complement of the simplex region is the union of the n + 1 half-spaces
x_i < 0 and sum(x) > 1. Inclusion-exclusion turns the integral and the
moments over the simplex into signed sums over intersections of at most n
half-spaces, each of which is a box-truncated normal after a linear change
of variables.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from core.errors import ZeroIntegralError
from core.models.truncation_summary import TruncationSummary
from features.gaussian.services import GaussianParams
from features.mvn_cdf.services import DEFAULT_MAX_EVALUATIONS, DEFAULT_SEED, DEFAULT_SHIFTS, RectangleIntegrator
from features.semi_analytic.services.box_moments_service import BoxMoments
from features.semi_analytic.services.region_service import RegionTruncation, index_subsets, truncation_of

logger = logging.getLogger(__name__)

DEFAULT_ABS_TOL = 1e-4
HIGH_ACCURACY_ABS_TOL = 1e-6


@dataclass(frozen=True)
class RegionMasses:
    """Probability, first and second moment masses of one region in x coordinates"""
    region: RegionTruncation
    phi: float
    phi_error: float
    first: np.ndarray
    second: np.ndarray


def region_masses(region: RegionTruncation, params: GaussianParams, integrator: RectangleIntegrator) -> RegionMasses:
    """
    Unnormalised moments of N(mean, cov) over one region.

    With x = mean + T^-1 W, the masses of W from the box formulas map back as
    phi * mean + T^-1 m1 and the four-term expansion of E(x x^T).
    """
    eps, a, b = region.box(params)
    box = BoxMoments(eps, a, b, integrator)
    estimate = integrator.probability(eps, a, b)
    phi = estimate.value

    boundary = box.boundary_masses()
    m1w = box.first_mass(boundary)
    m2w = box.second_mass(boundary)

    t_inv = np.linalg.inv(region.t_matrix)
    mu = params.mean
    shift = t_inv @ m1w
    first = phi * mu + shift
    second = phi * np.outer(mu, mu) + np.outer(mu, shift) + np.outer(shift, mu) + t_inv @ m2w @ t_inv.T
    return RegionMasses(region, phi, estimate.abs_error, first, 0.5 * (second + second.T))


def _compensated_sum(terms: Sequence[np.ndarray]) -> np.ndarray:
    stacked = np.stack([np.asarray(t, dtype=np.float64) for t in terms])
    flat = stacked.reshape(len(terms), -1)
    sums = np.array([math.fsum(flat[:, i]) for i in range(flat.shape[1])])
    return sums.reshape(stacked.shape[1:])


def estimate_semianalytic(
    params: GaussianParams,
    abs_tol: float = DEFAULT_ABS_TOL,
    max_workers: int = 1,
    seed: int = DEFAULT_SEED,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
    shifts: int = DEFAULT_SHIFTS,
) -> TruncationSummary:
    """
    Integral, mean and covariance by inclusion-exclusion over 2^(n+1) - 2 regions.

    Args:
        params: Non-truncated distribution
        abs_tol: Absolute error target of every box probability
        max_workers: Threads evaluating regions concurrently; results do not depend on it
        seed: Seed of the box-probability lattice shifts
        max_evaluations: Evaluation budget of each box probability
        shifts: Random lattice shifts per box-probability pass

    Raises:
        ZeroIntegralError: cancellation left Z at or below abs_tol times the term
            count, or produced non-finite or impossible moments
    """
    started = time.perf_counter()
    integrator = RectangleIntegrator(abs_tol=abs_tol, seed=seed, max_evaluations=max_evaluations, shifts=shifts)
    regions = [truncation_of(v, params) for v in index_subsets(params.dim)]

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            masses: List[RegionMasses] = list(pool.map(lambda r: region_masses(r, params, integrator), regions))
    else:
        masses = [region_masses(r, params, integrator) for r in regions]

    mu = params.mean
    z_raw = math.fsum([1.0] + [m.region.sign * m.phi for m in masses])
    first = _compensated_sum([mu] + [m.region.sign * m.first for m in masses])
    second = _compensated_sum([params.cov + np.outer(mu, mu)] + [m.region.sign * m.second for m in masses])

    terms = len(masses)
    diagnostics: Dict[str, Any] = {
        'regions': terms,
        'region_phi_calls': terms,
        'abs_tol': abs_tol,
        'z_raw': z_raw,
        'z_se': math.sqrt(sum((m.phi_error / 3.0) ** 2 for m in masses)),
    }
    diagnostics.update(integrator.stats())

    if not z_raw > abs_tol * terms:
        raise ZeroIntegralError(
            f"estimate_semianalytic: Z={z_raw:.3e} not above {abs_tol:g} * {terms} terms",
            z_raw,
            diagnostics,
        )

    z = min(z_raw, 1.0)
    mean_t = first / z_raw
    cov_t = second / z_raw - np.outer(mean_t, mean_t)
    cov_t = 0.5 * (cov_t + cov_t.T)

    if not (np.all(np.isfinite(mean_t)) and np.all(np.isfinite(cov_t))):
        raise ZeroIntegralError("estimate_semianalytic: non-finite moments", z_raw, diagnostics)
    if np.any(mean_t < -0.5) or np.any(mean_t > 1.5) or np.any(np.abs(cov_t) > 1.0):
        raise ZeroIntegralError(
            f"estimate_semianalytic: moments lost significance (mean range "
            f"[{mean_t.min():.3g}, {mean_t.max():.3g}], max |cov| {np.abs(cov_t).max():.3g})",
            z_raw,
            diagnostics,
        )

    diagnostics['wall_seconds'] = time.perf_counter() - started
    logger.debug(
        f"estimate_semianalytic: dim={params.dim} z={z:.6g} regions={terms} "
        f"rect_prob_calls={integrator.calls}"
    )
    return TruncationSummary(z=z, z_log=math.log(z), mean_t=mean_t, cov_t=cov_t, diagnostics=diagnostics)
