"""First and second moments of a zero-mean normal truncated to a box.

Uses the moment formulas of Tallis and Manjunath-Wilhelm, written in terms
of the one- and two-coordinate marginal densities F_k and F_kq of the
truncated distribution. Every boundary term at an infinite endpoint is
zero. ``BoxMoments`` works with unnormalised masses (probability times
density or moment) so callers never divide by a tiny box probability.

Indices are 0-based throughout.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from core.errors import NearSingularCorrelationError, ValidationError, ZeroIntegralError
from features.mvn_cdf.services import HyperRectangle, RectangleIntegrator

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-12
PD_TOL = 1e-10


@dataclass(frozen=True)
class PartialCorrelationSet:
    """
    Correlations of a covariance and its partial correlations around a pair (k, q).

    rho_cond1[i, j, m] is the correlation of i and j given m, beta[i, j, m]
    the coefficient of standardized j when regressing standardized i on
    j and m, and rho_cond2[i, j] the correlation of i and j given k and q.
    Entries without meaning (repeated indices, rows k and q of rho_cond2)
    hold 0, with 1 on the diagonals.
    """
    rho: np.ndarray
    rho_cond1: np.ndarray
    beta: np.ndarray
    rho_cond2: np.ndarray
    k: int
    q: int


def _correlation(eps: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.diag(eps))
    rho = eps / np.outer(sd, sd)
    np.fill_diagonal(rho, 1.0)
    return np.clip(rho, -1.0, 1.0)


def _check_singular(one_minus_sq: np.ndarray, mask: np.ndarray, what: str):
    if np.any(one_minus_sq[mask] <= SINGULAR_TOL):
        raise NearSingularCorrelationError(f"partial_correlations: {what} correlation within 1e-12 of +-1")


def _first_order(eps: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """rho, rho_cond1, beta for all index triples"""
    n = eps.shape[0]
    rho = _correlation(eps)
    off = ~np.eye(n, dtype=bool)
    one_minus = 1.0 - rho * rho
    _check_singular(one_minus, off, "bivariate")

    idx = np.arange(n)
    i, j, m = np.meshgrid(idx, idx, idx, indexing='ij')
    distinct = (i != j) & (i != m) & (j != m)

    num = rho[i, j] - rho[i, m] * rho[j, m]
    with np.errstate(divide='ignore', invalid='ignore'):
        cond = num / np.sqrt(one_minus[i, m] * one_minus[j, m])
        beta = num / one_minus[j, m]
    rho_cond1 = np.where(distinct, np.clip(cond, -1.0, 1.0), 0.0)
    rho_cond1[(i == j) & (i != m)] = 1.0
    beta = np.where(distinct, beta, 0.0)
    return rho, rho_cond1, beta


def _second_order(rho_cond1: np.ndarray, k: int, q: int) -> np.ndarray:
    n = rho_cond1.shape[0]
    others = np.array([i for i in range(n) if i not in (k, q)], dtype=int)
    out = np.eye(n)
    if others.size == 0:
        return out
    r_k = rho_cond1[:, :, k]
    iq = r_k[others, q]
    one_minus = 1.0 - iq * iq
    if np.any(one_minus <= SINGULAR_TOL):
        raise NearSingularCorrelationError(
            f"partial_correlations: correlation with coordinate {q} given {k} within 1e-12 of +-1"
        )
    num = r_k[np.ix_(others, others)] - np.outer(iq, iq)
    block = num / np.sqrt(np.outer(one_minus, one_minus))
    np.fill_diagonal(block, 1.0)
    out[np.ix_(others, others)] = np.clip(block, -1.0, 1.0)
    return out


def partial_correlations(eps, k: int, q: int) -> PartialCorrelationSet:
    """
    Bivariate, first-order and second-order partial correlations of ``eps``.

    Raises:
        NearSingularCorrelationError: some 1 - rho^2 in a denominator is <= 1e-12
    """
    eps = np.asarray(eps, dtype=np.float64)
    n = eps.shape[0]
    if k == q or not (0 <= k < n and 0 <= q < n):
        raise ValidationError(f"partial_correlations: need distinct indices in [0, {n}), got k={k}, q={q}")
    rho, rho_cond1, beta = _first_order(eps)
    return PartialCorrelationSet(rho, rho_cond1, beta, _second_order(rho_cond1, k, q), k, q)


class BoxMoments:
    """
    Unnormalised marginal densities and moments of N(0, eps) restricted to [lower, upper].

    ``phi`` is the box probability; ``univariate_mass(k, w)`` is phi * F_k(w),
    ``bivariate_mass(k, q, wk, wq)`` is phi * F_kq(wk, wq), ``first_mass()``
    is phi * E(W) and ``second_mass()`` is phi * E(W W^T).
    """

    def __init__(self, eps, lower, upper, integrator: RectangleIntegrator):
        self.eps = np.asarray(eps, dtype=np.float64)
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        self.n = self.eps.shape[0]
        self.integrator = integrator
        self._phi: Optional[float] = None
        self._conditional_cov: Dict[int, np.ndarray] = {}
        self._first_order = None
        self._rho_cond2: Dict[Tuple[int, int], np.ndarray] = {}

    @classmethod
    def from_rect(cls, eps, rect: HyperRectangle, integrator: RectangleIntegrator) -> "BoxMoments":
        eps = np.asarray(eps, dtype=np.float64)
        if eps.shape != (rect.dim, rect.dim):
            raise ValidationError(f"BoxMoments: covariance shape {eps.shape} does not match box dim {rect.dim}")
        return cls(eps, rect.lower, rect.upper, integrator)

    @property
    def phi(self) -> float:
        if self._phi is None:
            self._phi = self.integrator.probability(self.eps, self.lower, self.upper).value
        return self._phi

    def _others(self, *skip: int) -> np.ndarray:
        return np.array([i for i in range(self.n) if i not in skip], dtype=int)

    def _schur(self, k: int) -> np.ndarray:
        cov = self._conditional_cov.get(k)
        if cov is None:
            others = self._others(k)
            s = self.eps[others, k]
            cov = self.eps[np.ix_(others, others)] - np.outer(s, s) / self.eps[k, k]
            cov = 0.5 * (cov + cov.T)
            eig = np.linalg.eigvalsh(cov)
            if eig[0] <= PD_TOL * eig[-1]:
                raise NearSingularCorrelationError(
                    f"marginal_univariate: conditional covariance given coordinate {k} "
                    f"has eigenvalues [{eig[0]:.3e}, {eig[-1]:.3e}]"
                )
            self._conditional_cov[k] = cov
        return cov

    def univariate_mass(self, k: int, w: float) -> float:
        if not np.isfinite(w):
            return 0.0
        var = self.eps[k, k]
        density = math.exp(-0.5 * w * w / var) / math.sqrt(2.0 * math.pi * var)
        if self.n == 1 or density == 0.0:
            return density
        others = self._others(k)
        cond_cov = self._schur(k)
        cond_mean = self.eps[others, k] * (w / var)
        inside = self.integrator.probability(cond_cov, self.lower[others] - cond_mean, self.upper[others] - cond_mean)
        return density * inside.value

    def _pair_correlations(self, k: int, q: int):
        if self._first_order is None:
            self._first_order = _first_order(self.eps)
        key = (min(k, q), max(k, q))
        if key not in self._rho_cond2:
            self._rho_cond2[key] = _second_order(self._first_order[1], k, q)
        return self._first_order, self._rho_cond2[key]

    def bivariate_mass(self, k: int, q: int, wk: float, wq: float) -> float:
        if not (np.isfinite(wk) and np.isfinite(wq)):
            return 0.0
        block = self.eps[np.ix_([k, q], [k, q])]
        det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
        if det <= 0.0:
            raise NearSingularCorrelationError(f"marginal_bivariate: 2x2 block ({k}, {q}) is singular")
        quad = (block[1, 1] * wk * wk - 2.0 * block[0, 1] * wk * wq + block[0, 0] * wq * wq) / det
        density = math.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
        others = self._others(k, q)
        if others.size == 0 or density == 0.0:
            return density

        (rho, rho_cond1, beta), r_kq = self._pair_correlations(k, q)
        sd = np.sqrt(np.diag(self.eps))
        zk = wk / sd[k]
        zq = wq / sd[q]
        shift = beta[others, k, q] * zk + beta[others, q, k] * zq
        scale = np.sqrt((1.0 - rho[others, q] ** 2) * (1.0 - rho_cond1[others, k, q] ** 2))
        a_star = (self.lower[others] / sd[others] - shift) / scale
        b_star = (self.upper[others] / sd[others] - shift) / scale
        inside = self.integrator.probability(r_kq[np.ix_(others, others)], a_star, b_star)
        return density * inside.value

    def boundary_masses(self) -> Tuple[np.ndarray, np.ndarray]:
        """phi * F_k at lower_k and at upper_k for every k"""
        fa = np.array([self.univariate_mass(k, self.lower[k]) for k in range(self.n)])
        fb = np.array([self.univariate_mass(k, self.upper[k]) for k in range(self.n)])
        return fa, fb

    def first_mass(self, boundary: Tuple[np.ndarray, np.ndarray] = None) -> np.ndarray:
        fa, fb = boundary if boundary is not None else self.boundary_masses()
        return self.eps @ (fa - fb)

    def _corner_sum(self, k: int, q: int) -> float:
        a, b = self.lower, self.upper
        return (
            self.bivariate_mass(k, q, a[k], a[q])
            - self.bivariate_mass(k, q, a[k], b[q])
            - self.bivariate_mass(k, q, b[k], a[q])
            + self.bivariate_mass(k, q, b[k], b[q])
        )

    def second_mass(self, boundary: Tuple[np.ndarray, np.ndarray] = None) -> np.ndarray:
        eps = self.eps
        fa, fb = boundary if boundary is not None else self.boundary_masses()
        with np.errstate(invalid='ignore'):
            edge = np.where(np.isfinite(self.lower), self.lower * fa, 0.0) - np.where(
                np.isfinite(self.upper), self.upper * fb, 0.0
            )
        u = edge / np.diag(eps)

        g = np.zeros((self.n, self.n))
        for k in range(self.n):
            for q in range(k + 1, self.n):
                g[k, q] = g[q, k] = self._corner_sum(k, q)
        ge = g @ eps
        h = ge - (np.diag(ge) / np.diag(eps))[:, np.newaxis] * eps

        second = self.phi * eps + eps @ np.diag(u) @ eps + eps @ h
        return 0.5 * (second + second.T)


def _normalised(box: BoxMoments, what: str) -> float:
    phi = box.phi
    if phi <= 0.0:
        raise ZeroIntegralError(f"{what}: box probability is zero", phi)
    return phi


def _box(eps, rect: HyperRectangle, abs_tol: float) -> BoxMoments:
    return BoxMoments.from_rect(eps, rect, RectangleIntegrator(abs_tol=abs_tol))


def marginal_univariate(k: int, w: float, eps, rect: HyperRectangle, abs_tol: float = 1e-4) -> float:
    """Density F_k(w) of coordinate k of the box-truncated normal"""
    box = _box(eps, rect, abs_tol)
    return box.univariate_mass(k, w) / _normalised(box, "marginal_univariate")


def marginal_bivariate(k: int, q: int, w_k: float, w_q: float, eps, rect: HyperRectangle, abs_tol: float = 1e-4) -> float:
    """Density F_kq(w_k, w_q) of coordinates (k, q) of the box-truncated normal"""
    if k == q:
        raise ValidationError(f"marginal_bivariate: indices must differ, got {k}")
    box = _box(eps, rect, abs_tol)
    return box.bivariate_mass(k, q, w_k, w_q) / _normalised(box, "marginal_bivariate")


def rect_first_moment(eps, rect: HyperRectangle, abs_tol: float = 1e-4) -> np.ndarray:
    """E(W) for W ~ N(0, eps) truncated to rect"""
    box = _box(eps, rect, abs_tol)
    return box.first_mass() / _normalised(box, "rect_first_moment")


def rect_second_moment(eps, rect: HyperRectangle, abs_tol: float = 1e-4) -> np.ndarray:
    """E(W W^T) for W ~ N(0, eps) truncated to rect"""
    box = _box(eps, rect, abs_tol)
    return box.second_mass() / _normalised(box, "rect_second_moment")
