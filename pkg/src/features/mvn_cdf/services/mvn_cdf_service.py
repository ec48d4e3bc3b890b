"""Probability of a multivariate normal inside an axis-aligned box.

One dimension uses the closed form. Two or more dimensions use Genz's
separation of variables with variable reordering, integrated by a randomly
shifted rank-1 lattice rule with tent periodization. The error estimate is
three standard errors over the random shifts, and the point count grows
until it meets the requested absolute tolerance or the evaluation budget
runs out.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import ndtr, ndtri

from core.errors import BudgetExceededError, DimensionMismatchError, ValidationError
from features.mvn_cdf.services.lattice_service import cbc_lattice

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20220417
DEFAULT_ABS_TOL = 1e-4
DEFAULT_MAX_EVALUATIONS = 2_000_000
DEFAULT_SHIFTS = 8
ABS_TOL_RANGE = (1e-8, 1e-2)

_PHINV_LO = np.finfo(np.float64).tiny
_PHINV_HI = 1.0 - np.finfo(np.float64).epsneg


def normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays, +-inf map to 1/0 exactly"""
    return ndtr(x)


@dataclass(frozen=True)
class HyperRectangle:
    """Box lower <= w <= upper; entries may be -inf / +inf"""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=np.float64)
        upper = np.array(self.upper, dtype=np.float64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise DimensionMismatchError(f"HyperRectangle: bound shapes {lower.shape} and {upper.shape} differ")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValidationError("HyperRectangle: NaN bound")
        if not np.all(lower < upper):
            bad = int(np.flatnonzero(~(lower < upper))[0])
            raise ValidationError(f"HyperRectangle: lower[{bad}]={lower[bad]} is not below upper[{bad}]={upper[bad]}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def full(cls, n: int) -> "HyperRectangle":
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def shifted(self, offset) -> "HyperRectangle":
        """Box translated by -offset, used to move the mean to zero"""
        offset = np.asarray(offset, dtype=np.float64)
        return HyperRectangle(self.lower - offset, self.upper - offset)


@dataclass(frozen=True)
class ProbEstimate:
    """Box probability with its estimated absolute error"""
    value: float
    abs_error: float
    evaluations: int
    budget_exhausted: bool = False


def _permuted_cholesky(covar: np.ndarray, low: np.ndarray, high: np.ndarray, tol: float = 1e-10):
    """
    Scaled and permuted Cholesky factor with matching bounds.

    Variables are reordered greedily so that the one with the smallest
    expected truncated probability is integrated first.
    """
    cho = np.array(covar, dtype=np.float64)
    new_lo = np.array(low, dtype=np.float64)
    new_hi = np.array(high, dtype=np.float64)
    n = cho.shape[0]

    dc = np.sqrt(np.maximum(np.diag(cho), 0.0))
    dc[dc == 0.0] = 1.0
    new_lo /= dc
    new_hi /= dc
    cho /= dc
    cho /= dc[:, np.newaxis]

    y = np.zeros(n)
    sqtp = np.sqrt(2 * np.pi)
    for k in range(n):
        epk = (k + 1) * tol
        im = k
        ck = 0.0
        dem = 1.0
        s = 0.0
        lo_m = 0.0
        hi_m = 0.0
        for i in range(k, n):
            if cho[i, i] > tol:
                ci = np.sqrt(cho[i, i])
                if i > 0:
                    s = cho[i, :k] @ y[:k]
                lo_i = (new_lo[i] - s) / ci
                hi_i = (new_hi[i] - s) / ci
                de = ndtr(hi_i) - ndtr(lo_i)
                if de <= dem:
                    ck = ci
                    dem = de
                    lo_m = lo_i
                    hi_m = hi_i
                    im = i
        if im > k:
            cho[im, im] = cho[k, k]
            _swap_slices(cho, np.s_[im, :k], np.s_[k, :k])
            _swap_slices(cho, np.s_[im + 1:, im], np.s_[im + 1:, k])
            _swap_slices(cho, np.s_[k + 1:im, k], np.s_[im, k + 1:im])
            _swap_slices(new_lo, k, im)
            _swap_slices(new_hi, k, im)
        if ck > epk:
            cho[k, k] = ck
            cho[k, k + 1:] = 0.0
            for i in range(k + 1, n):
                cho[i, k] /= ck
                cho[i, k + 1:i + 1] -= cho[i, k] * cho[k + 1:i + 1, k]
            if abs(dem) > tol:
                y[k] = (np.exp(-lo_m * lo_m / 2) - np.exp(-hi_m * hi_m / 2)) / (sqtp * dem)
            else:
                y[k] = (lo_m + hi_m) / 2
                if lo_m < -10:
                    y[k] = hi_m
                elif hi_m > 10:
                    y[k] = lo_m
            cho[k, :k + 1] /= ck
            new_lo[k] /= ck
            new_hi[k] /= ck
        else:
            cho[k:, k] = 0.0
            y[k] = (new_lo[k] + new_hi[k]) / 2
    return cho, new_lo, new_hi


def _swap_slices(x, slc1, slc2):
    t = x[slc1].copy()
    x[slc1] = x[slc2].copy()
    x[slc2] = t


def _lattice_pass(cho, lo, hi, points: int, rng: np.random.Generator, shifts: int) -> Tuple[float, float, int]:
    """One randomized lattice estimate: (probability, 3 * standard error, evaluations)"""
    n = cho.shape[0]
    ci = ndtr(lo[0] / cho[0, 0])
    dci = ndtr(hi[0] / cho[0, 0]) - ci
    q, n_points = cbc_lattice(n - 1, max(points // shifts, 5))
    y = np.zeros((n - 1, n_points))
    i_samples = np.arange(1, n_points + 1)

    prob = 0.0
    error_var = 0.0
    for j in range(shifts):
        c = np.full(n_points, ci)
        dc = np.full(n_points, dci)
        pv = dc.copy()
        for i in range(1, n):
            z = q[i - 1] * i_samples + rng.random()
            z -= z.astype(np.int64)
            x = np.abs(2 * z - 1)
            y[i - 1, :] = ndtri(np.clip(c + x * dc, _PHINV_LO, _PHINV_HI))
            s = cho[i, :i] @ y[:i, :]
            ct = cho[i, i]
            c = ndtr((lo[i] - s) / ct)
            dc = ndtr((hi[i] - s) / ct) - c
            pv = pv * dc
        d = (pv.mean() - prob) / (j + 1)
        prob += d
        error_var = (j - 1) * error_var / (j + 1) + d * d
    return float(prob), float(3 * np.sqrt(error_var)), n_points * shifts


def box_probability(
    cov,
    lower,
    upper,
    abs_tol: float = DEFAULT_ABS_TOL,
    seed: int = DEFAULT_SEED,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
    shifts: int = DEFAULT_SHIFTS,
) -> ProbEstimate:
    """
    Probability that a zero-mean normal with covariance ``cov`` lies in [lower, upper].

    Coordinates unbounded on both sides are marginalized out exactly before
    integrating. A fresh generator seeded with ``seed`` drives the lattice
    shifts, so identical calls return identical values.
    """
    cov = np.asarray(cov, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)

    keep = np.isfinite(lower) | np.isfinite(upper)
    if not np.any(keep):
        return ProbEstimate(1.0, 0.0, 0)
    if not np.all(keep):
        cov = cov[np.ix_(keep, keep)]
        lower = lower[keep]
        upper = upper[keep]

    n = lower.shape[0]
    if n == 1:
        sd = np.sqrt(cov[0, 0])
        a, b = lower[0] / sd, upper[0] / sd
        # integrate in the tail nearest to the box for accuracy
        if a > 0:
            value = ndtr(-a) - ndtr(-b)
        else:
            value = ndtr(b) - ndtr(a)
        return ProbEstimate(float(min(max(value, 0.0), 1.0)), 0.0, 1)

    cho, lo, hi = _permuted_cholesky(cov, lower, upper)
    rng = np.random.default_rng(seed)

    points = 1000 * n
    evaluations = 0
    prob = 0.0
    est_error = 1.0
    while est_error > abs_tol and evaluations < max_evaluations:
        points = int(round(np.sqrt(2) * points))
        pi, ei, ni = _lattice_pass(cho, lo, hi, points, rng, shifts)
        evaluations += ni
        wt = 1.0 / (1.0 + (ei / est_error) ** 2)
        prob += wt * (pi - prob)
        est_error = float(np.sqrt(wt) * ei)

    prob = float(min(max(prob, 0.0), 1.0))
    return ProbEstimate(prob, est_error, evaluations, budget_exhausted=est_error > abs_tol)


def _check_abs_tol(abs_tol: float):
    lo, hi = ABS_TOL_RANGE
    if not (lo <= abs_tol <= hi):
        raise ValidationError(f"rect_prob: abs_tol={abs_tol:g} outside [{lo:g}, {hi:g}]")


def rect_prob(
    rect: HyperRectangle,
    params,
    abs_tol: float = DEFAULT_ABS_TOL,
    seed: int = DEFAULT_SEED,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
    strict: bool = False,
    shifts: int = DEFAULT_SHIFTS,
) -> ProbEstimate:
    """
    Probability of N(params.mean, params.cov) inside ``rect``.

    Args:
        rect: Integration box
        params: GaussianParams of matching dimension
        abs_tol: Target absolute error, within [1e-8, 1e-2]
        seed: Seed of the lattice shifts
        max_evaluations: Integrand evaluation budget
        strict: Raise BudgetExceededError instead of warning when the budget runs out
        shifts: Random lattice shifts per pass

    Returns:
        ProbEstimate whose abs_error is the achieved error estimate
    """
    if rect.dim != params.dim:
        raise DimensionMismatchError(f"rect_prob: box dim {rect.dim} does not match params dim {params.dim}")
    _check_abs_tol(abs_tol)
    centred = rect.shifted(params.mean)
    estimate = box_probability(params.cov, centred.lower, centred.upper, abs_tol, seed, max_evaluations, shifts)
    return _check_budget(estimate, abs_tol, strict)


def _check_budget(estimate: ProbEstimate, abs_tol: float, strict: bool) -> ProbEstimate:
    if estimate.budget_exhausted:
        message = (
            f"rect_prob: budget of {estimate.evaluations} evaluations exhausted "
            f"at abs_error={estimate.abs_error:.3e} > {abs_tol:.1e}"
        )
        if strict:
            raise BudgetExceededError(message, estimate)
        logger.warning(message)
    return estimate


class RectangleIntegrator:
    """
    Box-probability evaluator with a per-instance result cache and call accounting.

    One instance serves one estimate call; it is safe to share between threads.
    """

    def __init__(
        self,
        abs_tol: float = DEFAULT_ABS_TOL,
        seed: int = DEFAULT_SEED,
        max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
        strict: bool = False,
        shifts: int = DEFAULT_SHIFTS,
    ):
        _check_abs_tol(abs_tol)
        if shifts < 2:
            raise ValidationError(f"RectangleIntegrator: shifts must be >= 2, got {shifts}")
        self.abs_tol = abs_tol
        self.seed = seed
        self.max_evaluations = max_evaluations
        self.strict = strict
        self.shifts = shifts
        self._cache: Dict[bytes, ProbEstimate] = {}
        self._lock = threading.Lock()
        self.calls = 0
        self.cache_hits = 0
        self.evaluations = 0
        self.max_abs_error = 0.0

    def probability(self, cov, lower, upper) -> ProbEstimate:
        """Zero-mean probability of [lower, upper] under ``cov``"""
        cov = np.ascontiguousarray(cov, dtype=np.float64)
        lower = np.ascontiguousarray(lower, dtype=np.float64)
        upper = np.ascontiguousarray(upper, dtype=np.float64)
        key = cov.tobytes() + lower.tobytes() + upper.tobytes()

        with self._lock:
            self.calls += 1
            cached: Optional[ProbEstimate] = self._cache.get(key)
            if cached is not None:
                self.cache_hits += 1
                return cached

        estimate = box_probability(cov, lower, upper, self.abs_tol, self.seed, self.max_evaluations, self.shifts)
        estimate = _check_budget(estimate, self.abs_tol, self.strict)

        with self._lock:
            self._cache[key] = estimate
            self.evaluations += estimate.evaluations
            self.max_abs_error = max(self.max_abs_error, estimate.abs_error)
        return estimate

    def stats(self) -> Dict[str, float]:
        return {
            'rect_prob_calls': self.calls,
            'rect_prob_cache_hits': self.cache_hits,
            'rect_prob_evaluations': self.evaluations,
            'rect_prob_max_abs_error': self.max_abs_error,
            'rect_prob_shifts': self.shifts,
        }
