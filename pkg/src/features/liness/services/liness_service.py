"""Analytic elliptical slice sampling for linearly constrained Gaussians.

Each step draws an auxiliary vector nu from the prior and considers the
ellipse y(theta) = y_t cos(theta) + nu sin(theta). Every constraint row
a . y + c >= 0 crosses the ellipse at no more than two angles, which are
found in closed form. The crossings split the ellipse into arcs; the arcs
lying inside the domain are kept, and the next state is drawn uniformly
over their total length. No proposal is ever rejected.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.errors import DegenerateEllipseError, EmptyArcSetError, InfeasibleStartError, ValidationError
from features.gaussian.services import CholeskyFactor
from features.liness.services.constraints_service import LinearConstraints

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
TANGENCY_TOL = 1e-12
MERGE_TOL = 1e-12
# normals and uniforms are pre-drawn in blocks of this many steps
CHUNK_STEPS = 4096


@dataclass(frozen=True)
class ArcSet:
    """Ordered angle intervals [lo, hi) of the ellipse that lie inside the domain"""
    intervals: Tuple[Tuple[float, float], ...]

    @classmethod
    def full(cls) -> "ArcSet":
        return cls(((0.0, TWO_PI),))

    @property
    def total_measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def contains(self, theta: float) -> bool:
        """Membership of an angle, taken modulo 2 pi"""
        for lo, hi in self.intervals:
            shifted = lo + (theta - lo) % TWO_PI
            if lo <= shifted < hi:
                return True
        return False

    def angle_at(self, u: float) -> float:
        """Inverse CDF of the uniform law on the arcs, for u in [0, 1)"""
        target = u * self.total_measure
        for lo, hi in self.intervals:
            length = hi - lo
            if target < length:
                return lo + target
            target -= length
        lo, hi = self.intervals[-1]
        return math.nextafter(hi, lo)


def ellipse_point(y_t, nu, theta: float) -> np.ndarray:
    """y_t cos(theta) + nu sin(theta)"""
    return np.asarray(y_t) * math.cos(theta) + np.asarray(nu) * math.sin(theta)


def _phase_angles(p, q):
    """
    Phase alpha_1 of p cos(theta) + q sin(theta) = r cos(theta - alpha_1).

    The acute angle arctan|q/p| is moved into the quadrant of (p, q).
    """
    acute = np.arctan2(np.abs(q), np.abs(p))
    return np.select(
        [(p < 0) & (q < 0), (p >= 0) & (q < 0), (p >= 0) & (q >= 0)],
        [-math.pi + acute, -acute, acute],
        default=math.pi - acute,
    )


def _half_widths(c, r):
    """alpha_2 with r cos(alpha_2) = -c; callers guarantee |c| <= r"""
    acute = np.arccos(np.clip(np.abs(c) / r, 0.0, 1.0))
    return np.where(c > 0, math.pi - acute, acute)


def constraint_intersections(a_row, c_i: float, y_t, nu) -> List[float]:
    """
    Angles in [0, 2 pi) where the ellipse meets a_row . y + c_i = 0.

    Returns no angle when |c_i| > r, one angle on exact tangency |c_i| = r,
    two otherwise, where r = hypot(a_row . y_t, a_row . nu).

    Raises:
        DegenerateEllipseError: the ellipse lies inside the hyperplane (r = 0, c_i = 0)
    """
    a_row = np.asarray(a_row, dtype=np.float64)
    if not np.any(a_row != 0.0):
        raise ValidationError("constraint_intersections: a_row is all zero")
    p = float(a_row @ np.asarray(y_t, dtype=np.float64))
    q = float(a_row @ np.asarray(nu, dtype=np.float64))
    r = math.hypot(p, q)
    if r == 0.0:
        if c_i == 0.0:
            raise DegenerateEllipseError("constraint_intersections: ellipse lies in the constraint hyperplane")
        return []
    if abs(c_i) > r:
        return []

    alpha1 = float(_phase_angles(np.array(p), np.array(q)))
    alpha2 = float(_half_widths(np.array(c_i), r))
    if abs(c_i) == r:
        return [(alpha1 + alpha2) % TWO_PI]
    return sorted([(alpha1 + alpha2) % TWO_PI, (alpha1 - alpha2) % TWO_PI])


def _crossing_angles(constraints: LinearConstraints, y_t: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Sorted, de-duplicated crossing angles of all non-tangent rows"""
    a = constraints.a_matrix
    c = constraints.c_vector
    p = a @ y_t
    q = a @ nu
    r = np.hypot(p, q)
    degenerate = (r == 0.0) & (c == 0.0)
    if np.any(degenerate):
        raise DegenerateEllipseError(
            f"active_arcs: ellipse lies in hyperplane of row {int(np.flatnonzero(degenerate)[0])}"
        )
    crossing = (r > 0.0) & (r - np.abs(c) >= TANGENCY_TOL * r)
    if not np.any(crossing):
        return np.empty(0)

    p, q, r, c = p[crossing], q[crossing], r[crossing], c[crossing]
    alpha1 = _phase_angles(p, q)
    alpha2 = _half_widths(c, r)
    angles = np.sort(np.mod(np.concatenate([alpha1 + alpha2, alpha1 - alpha2]), TWO_PI))
    keep = np.concatenate([[True], np.diff(angles) > MERGE_TOL])
    return angles[keep]


def active_arcs(constraints: LinearConstraints, y_t, nu) -> ArcSet:
    """
    Arcs of the ellipse through y_t (theta = 0) and nu (theta = pi/2) inside the domain.

    The crossing angles are sorted, the first is repeated 2 pi later, and
    every arc between neighbours is kept if its midpoint satisfies all
    constraints.

    Raises:
        EmptyArcSetError: no arc passed, so y_t was not inside the domain
    """
    y_t = np.asarray(y_t, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    angles = _crossing_angles(constraints, y_t, nu)
    if angles.size == 0:
        return ArcSet.full()

    bounds = np.append(angles, angles[0] + TWO_PI)
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    points = np.outer(np.cos(mids), y_t) + np.outer(np.sin(mids), nu)
    inside = np.all(constraints.margins(points) >= 0.0, axis=1)
    if not np.any(inside):
        raise EmptyArcSetError(
            f"active_arcs: none of {len(mids)} arcs lies in the domain; "
            f"start margin {float(np.min(constraints.margins(y_t))):.3e}"
        )
    return ArcSet(tuple((float(bounds[k]), float(bounds[k + 1])) for k in np.flatnonzero(inside)))


def _advance(constraints: LinearConstraints, y_t: np.ndarray, nu: np.ndarray, u: float) -> np.ndarray:
    arcs = active_arcs(constraints, y_t, nu)
    return ellipse_point(y_t, nu, arcs.angle_at(u))


def liness_step(constraints: LinearConstraints, factor: CholeskyFactor, y_t, rng: np.random.Generator) -> np.ndarray:
    """One rejection-free transition from y_t"""
    y_t = np.asarray(y_t, dtype=np.float64)
    nu = factor.lower @ rng.standard_normal(factor.dim)
    return _advance(constraints, y_t, nu, rng.random())


def sample_liness(
    constraints: LinearConstraints,
    factor: CholeskyFactor,
    y0,
    count: int,
    thin: int = 1,
    burn_in: int = 0,
    rng: np.random.Generator = None,
) -> np.ndarray:
    """
    Run a chain of burn_in + count * thin steps from y0.

    Args:
        constraints: Domain of the chain
        factor: Cholesky factor of the zero-mean prior
        y0: Start point, strictly inside the domain
        count: Number of states returned
        thin: Keep every thin-th state after burn-in
        burn_in: Steps discarded first
        rng: Random stream

    Returns:
        (count, n) array of retained states
    """
    if count < 1 or thin < 1 or burn_in < 0:
        raise ValidationError(f"sample_liness: invalid count={count}, thin={thin}, burn_in={burn_in}")
    if rng is None:
        rng = np.random.default_rng()
    y = np.array(y0, dtype=np.float64)
    start_margin = float(np.min(constraints.margins(y)))
    if not start_margin > 0.0:
        raise InfeasibleStartError(f"sample_liness: start point margin {start_margin:.3e} is not positive")

    total = burn_in + count * thin
    out = np.empty((count, factor.dim))
    lower_t = factor.lower.T
    step = 0
    kept = 0
    while step < total:
        block = min(CHUNK_STEPS, total - step)
        nus = rng.standard_normal((block, factor.dim)) @ lower_t
        us = rng.random(block)
        for b in range(block):
            y = _advance(constraints, y, nus[b], us[b])
            step += 1
            if step > burn_in and (step - burn_in) % thin == 0:
                out[kept] = y
                kept += 1
    return out
