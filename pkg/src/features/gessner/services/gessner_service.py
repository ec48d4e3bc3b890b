"""Integral and moments of the simplex-truncated normal by constrained MCMC.

The integral is a product of conditional probabilities over nested domains
obtained by loosening every constraint by a shift gamma. Subset simulation
picks the shifts adaptively from a small sample per level; the
Holmes-Diaconis-Ross replay then reuses those fixed shifts with many more
samples per level. Moments come from one long LIN-ESS chain on the target
domain.
"""

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from core.errors import LevelStallError, MaxLevelsExceededError, ValidationError, ZeroCountError
from core.models.truncation_summary import TruncationSummary
from core.services.sample_statistics import sample_moments
from features.gaussian.services import CholeskyFactor, GaussianParams, cholesky, sample_mvn
from features.liness.services import (
    LinearConstraints,
    initial_point,
    sample_liness,
    shifted_constraints,
    simplex_constraints,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GessnerConfig:
    """Sample counts, thinning and seeding of the constrained-MCMC estimator"""
    rho: float = 0.5
    m_subset: int = 16
    m_hdr: int = 10_000
    thin_subset: int = 10
    thin_hdr: int = 2
    m_moments: int = 10_000
    thin_moments: int = 2
    burn_in: Optional[int] = None  # None means 50 * thin_moments
    seed: int = 0
    max_levels: int = 200

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ValidationError(f"GessnerConfig: rho must lie in (0, 1), got {self.rho}")
        for name in ('m_subset', 'm_hdr', 'thin_subset', 'thin_hdr', 'm_moments', 'thin_moments', 'max_levels'):
            if getattr(self, name) < 1:
                raise ValidationError(f"GessnerConfig: {name} must be >= 1, got {getattr(self, name)}")
        if self.m_subset < 2:
            raise ValidationError(f"GessnerConfig: m_subset must be >= 2, got {self.m_subset}")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValidationError(f"GessnerConfig: burn_in must be >= 0, got {self.burn_in}")

    @property
    def moment_burn_in(self) -> int:
        return 50 * self.thin_moments if self.burn_in is None else self.burn_in

    @property
    def subset_keep(self) -> int:
        """Order-statistic rank k: exactly k samples fall below each new shift"""
        return min(math.ceil(self.rho * self.m_subset), self.m_subset - 1)

    def with_uniform_thinning(self, thin: int) -> "GessnerConfig":
        """Same settings with the integral and moment chains thinned by ``thin``"""
        return dataclasses.replace(self, thin_hdr=thin, thin_moments=thin)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "GessnerConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ValidationError(f"GessnerConfig: unknown settings {sorted(unknown)}")
        return cls(**dict(values))


@dataclass(frozen=True)
class LevelSchedule:
    """Shifts chosen by subset simulation, last one exactly 0"""
    gammas: Tuple[float, ...]
    biased_log_z: float
    per_level_counts: Tuple[int, ...]
    samples_per_level: int

    @property
    def levels(self) -> int:
        return len(self.gammas)

    @property
    def level_probabilities(self) -> Tuple[float, ...]:
        return tuple(c / self.samples_per_level for c in self.per_level_counts)


@dataclass(frozen=True)
class HdrEstimate:
    """Replayed integral estimate with per-level conditional probabilities"""
    log_z: float
    level_probabilities: Tuple[float, ...]
    samples_per_level: int
    z_se: float = field(default=float('nan'))


def shift_value(constraints: LinearConstraints, y) -> float:
    """g = -min(A y + c); g <= 0 exactly when y satisfies every constraint"""
    return float(constraints.shift_values(np.asarray(y, dtype=np.float64)))


def _delta_method_se(log_z: float, probabilities, m: int) -> float:
    """SE of a product of independent binomial proportions"""
    rel_var = sum((1.0 - p) / (m * p) for p in probabilities)
    return math.exp(log_z) * math.sqrt(rel_var)


def _seed_next_level(ys: np.ndarray, below: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    candidates = ys[below]
    return candidates[rng.integers(len(candidates))]


def subset_simulation(
    constraints: LinearConstraints,
    factor: CholeskyFactor,
    config: GessnerConfig,
    rng: np.random.Generator,
) -> LevelSchedule:
    """
    Choose nested shifts gamma_1 > ... > gamma_S = 0.

    At each level the new shift is the midpoint of the k-th and (k+1)-th
    smallest shift values of the current M samples, clamped at 0. The next
    level's M samples come from a LIN-ESS chain on the loosened domain,
    started at a uniformly chosen sample already inside it.
    """
    m = config.m_subset
    k = config.subset_keep
    zero_mean = np.zeros(factor.dim)
    ys = sample_mvn(factor, zero_mean, rng, m)

    gammas = []
    counts = []
    log_z = 0.0
    for level in range(config.max_levels):
        g = constraints.shift_values(ys)
        ordered = np.sort(g)
        gamma = 0.5 * (ordered[k - 1] + ordered[k])
        if gamma <= 0.0:
            gamma = 0.0
        below = g < gamma
        count = int(np.count_nonzero(below))
        if count == 0:
            raise LevelStallError(
                f"subset_simulation: no sample below gamma={gamma:.4g} at level {level + 1}",
                {'gammas': gammas, 'counts': counts},
            )
        log_z += math.log(count) - math.log(m)
        gammas.append(float(gamma))
        counts.append(count)
        logger.debug(f"subset_simulation: level {level + 1} gamma={gamma:.6g} count={count}")

        if gamma == 0.0:
            return LevelSchedule(tuple(gammas), log_z, tuple(counts), m)

        start = _seed_next_level(ys, below, rng)
        ys = sample_liness(shifted_constraints(constraints, gamma), factor, start, m, config.thin_subset, 0, rng)

    raise MaxLevelsExceededError(
        f"subset_simulation: shift still {gammas[-1]:.4g} after {config.max_levels} levels",
        {'gammas': gammas, 'counts': counts, 'biased_log_z': log_z},
    )


def hdr_estimate(
    constraints: LinearConstraints,
    factor: CholeskyFactor,
    schedule: LevelSchedule,
    config: GessnerConfig,
    rng: np.random.Generator,
) -> HdrEstimate:
    """
    Replay the fixed shifts with m_hdr samples per level.

    Level s counts how many samples from domain s-1 (prior draws for s = 1)
    fall strictly inside domain s; log Z is the sum of the log fractions.

    Raises:
        ZeroCountError: a level caught no sample; ``log_z`` is -inf
    """
    m = config.m_hdr
    ys = sample_mvn(factor, np.zeros(factor.dim), rng, m)
    log_z = 0.0
    probabilities = []
    last = schedule.levels - 1

    for level, gamma in enumerate(schedule.gammas):
        below = constraints.shift_values(ys) < gamma
        count = int(np.count_nonzero(below))
        if count == 0:
            raise ZeroCountError(
                f"hdr_estimate: no sample inside level {level + 1} (gamma={gamma:.4g})",
                {'level': level + 1, 'level_probabilities': probabilities, 'gammas': list(schedule.gammas)},
            )
        log_z += math.log(count) - math.log(m)
        probabilities.append(count / m)
        if level == last:
            break
        start = _seed_next_level(ys, below, rng)
        ys = sample_liness(shifted_constraints(constraints, gamma), factor, start, m, config.thin_hdr, 0, rng)

    return HdrEstimate(
        log_z=log_z,
        level_probabilities=tuple(probabilities),
        samples_per_level=m,
        z_se=_delta_method_se(log_z, probabilities, m),
    )


def estimate_gessner(params: GaussianParams, config: GessnerConfig = None) -> TruncationSummary:
    """
    Integral by subset simulation plus replay, moments by a LIN-ESS chain.

    Three independent streams are spawned from config.seed: schedule,
    replay, and moment chain.
    """
    if config is None:
        config = GessnerConfig()
    started = time.perf_counter()
    rng_subset, rng_hdr, rng_moments = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(3)
    )

    factor = cholesky(params)
    constraints = simplex_constraints(params)
    schedule = subset_simulation(constraints, factor, config, rng_subset)
    hdr = hdr_estimate(constraints, factor, schedule, config, rng_hdr)

    ys = sample_liness(
        constraints,
        factor,
        initial_point(params),
        config.m_moments,
        config.thin_moments,
        config.moment_burn_in,
        rng_moments,
    )
    moments = sample_moments(ys + params.mean, correlated=True)
    wall = time.perf_counter() - started

    diagnostics: Dict[str, Any] = {
        'levels': schedule.levels,
        'gammas': list(schedule.gammas),
        'biased_log_z': schedule.biased_log_z,
        'subset_level_counts': list(schedule.per_level_counts),
        'level_probabilities': list(hdr.level_probabilities),
        'z_se': hdr.z_se,
        'mean_se': moments.mean_se,
        'cov_se': moments.cov_se,
        'ess_min': moments.ess_min,
        'thin_moments': config.thin_moments,
        'wall_seconds': wall,
    }
    logger.debug(
        f"estimate_gessner: dim={params.dim} levels={schedule.levels} "
        f"log_z={hdr.log_z:.6g} ess_min={moments.ess_min:.1f}"
    )
    return TruncationSummary.from_log(hdr.log_z, moments.mean, moments.cov, diagnostics)
