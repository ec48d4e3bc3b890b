"""Rejection sampling of the simplex-truncated normal"""

import logging
import math
import time
from typing import Optional

import numpy as np

from core.errors import AcceptanceTooLowError, ValidationError
from core.models.truncation_summary import TruncationSummary
from core.services.sample_statistics import binomial_se, sample_moments
from features.gaussian.services import GaussianParams, cholesky, sample_mvn

logger = logging.getLogger(__name__)

DEFAULT_M_TARGET = 10_000
DEFAULT_MAX_TRIALS = 100_000_000
MIN_BATCH = 1024
MAX_BATCH = 1_000_000


def in_domain_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise membership of the closed region x >= 0, sum(x) <= 1"""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.all(x >= 0.0, axis=1) & (np.sum(x, axis=1) <= 1.0)


def in_domain(x) -> bool:
    """True iff every x_i >= 0 and sum(x) <= 1 (boundary included)"""
    return bool(in_domain_rows(x)[0])


def _next_batch(kept: int, total: int, m_target: int, remaining_trials: int) -> int:
    rate = (kept + 1) / (total + 2)
    needed = int(1.2 * (m_target - kept) / rate) + 1
    return int(min(max(needed, MIN_BATCH), MAX_BATCH, remaining_trials))


def estimate_rejection(
    params: GaussianParams,
    m_target: int = DEFAULT_M_TARGET,
    max_trials: int = DEFAULT_MAX_TRIALS,
    rng: Optional[np.random.Generator] = None,
) -> TruncationSummary:
    """
    Estimate Z, mean and covariance by keeping the draws that land in the simplex.

    Draws are generated in batches, but the trial count stops exactly at the
    draw that produced the m_target-th acceptance.

    Args:
        params: Non-truncated distribution
        m_target: Number of accepted samples wanted (>= 2)
        max_trials: Upper limit on the number of draws
        rng: Random stream; a fresh unseeded one if omitted

    Raises:
        AcceptanceTooLowError: max_trials reached first; partial counts in ``diagnostics``
    """
    if m_target < 2:
        raise ValidationError(f"estimate_rejection: m_target must be >= 2, got {m_target}")
    if max_trials < 1:
        raise ValidationError(f"estimate_rejection: max_trials must be >= 1, got {max_trials}")
    if rng is None:
        rng = np.random.default_rng()

    started = time.perf_counter()
    factor = cholesky(params)
    accepted = []
    kept = 0
    total = 0

    while kept < m_target and total < max_trials:
        batch = _next_batch(kept, total, m_target, max_trials - total)
        draws = sample_mvn(factor, params.mean, rng, batch)
        hits = np.flatnonzero(in_domain_rows(draws))
        missing = m_target - kept
        if len(hits) >= missing:
            hits = hits[:missing]
            total += int(hits[-1]) + 1
        else:
            total += batch
        accepted.append(draws[hits])
        kept += len(hits)

    if kept < m_target:
        z = kept / total
        diagnostics = {'m_kept': kept, 'm_total': total, 'z': z, 'z_se': binomial_se(z, total)}
        raise AcceptanceTooLowError(
            f"estimate_rejection: only {kept} of {m_target} samples accepted in {total} trials",
            diagnostics,
        )

    samples = np.concatenate(accepted, axis=0)
    moments = sample_moments(samples, correlated=False)
    z = kept / total
    wall = time.perf_counter() - started
    logger.debug(f"estimate_rejection: dim={params.dim} kept={kept} total={total} z={z:.6g}")

    return TruncationSummary(
        z=z,
        z_log=math.log(kept) - math.log(total),
        mean_t=moments.mean,
        cov_t=moments.cov,
        diagnostics={
            'm_kept': kept,
            'm_total': total,
            'z_se': binomial_se(z, total),
            'mean_se': moments.mean_se,
            'cov_se': moments.cov_se,
            'ess_min': moments.ess_min,
            'wall_seconds': wall,
        },
    )
