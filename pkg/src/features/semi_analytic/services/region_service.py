"""Half-space intersections of the simplex complement, as boxes in transformed coordinates.

Half-space i (1-based) is x_i < 0 for i <= n and sum(x) > 1 for i = n + 1.
The intersection over a subset v is rewritten as c_v <= T_v x <= d_v with
an invertible T_v, so W = T_v (x - mean) is a zero-mean normal truncated
to a box.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np

from core.errors import ValidationError
from features.gaussian.services import GaussianParams
from features.mvn_cdf.services import ProbEstimate, RectangleIntegrator


def index_subsets(n: int) -> List[Tuple[int, ...]]:
    """Non-empty subsets of {1, ..., n+1} with at most n elements, by size then lexicographically"""
    if n < 2:
        raise ValidationError(f"index_subsets: n must be >= 2, got {n}")
    labels = range(1, n + 2)
    return [v for size in range(1, n + 1) for v in combinations(labels, size)]


@dataclass(frozen=True)
class RegionTruncation:
    """Subset v with its transform T_v and bounds c_v <= T_v x <= d_v"""
    subset: Tuple[int, ...]
    t_matrix: np.ndarray
    c_lower: np.ndarray
    d_upper: np.ndarray

    @property
    def sign(self) -> int:
        """Inclusion-exclusion sign (-1)^|v|"""
        return -1 if len(self.subset) % 2 else 1

    def box(self, params: GaussianParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(eps, a, b): covariance T S T^T and centred bounds c - T mean, d - T mean"""
        t = self.t_matrix
        shift = t @ params.mean
        eps = t @ params.cov @ t.T
        return 0.5 * (eps + eps.T), self.c_lower - shift, self.d_upper - shift


def truncation_of(v, params: GaussianParams) -> RegionTruncation:
    """
    Build T_v, c_v, d_v for subset v.

    Start from T = I, c = -inf, d = +inf. For each v_i <= n set d[v_i] = 0.
    If n + 1 is in v, the smallest row j not in v becomes all ones with
    c[j] = 1. For n = 2, v = {3} this gives T = [[1, 1], [0, 1]]; any free row
    may carry the sum, and the region is the same.
    """
    n = params.dim
    subset = tuple(sorted(int(i) for i in v))
    if not subset or len(subset) > n or len(set(subset)) != len(subset) or subset[0] < 1 or subset[-1] > n + 1:
        raise ValidationError(f"truncation_of: invalid subset {v} for dim {n}")

    t = np.eye(n)
    c = np.full(n, -np.inf)
    d = np.full(n, np.inf)
    for label in subset:
        if label <= n:
            d[label - 1] = 0.0
        else:
            j = next(row for row in range(1, n + 1) if row not in subset)
            t[j - 1, :] = 1.0
            c[j - 1] = 1.0
    return RegionTruncation(subset, t, c, d)


def region_integral(
    region: RegionTruncation,
    params: GaussianParams,
    abs_tol: float = 1e-4,
    integrator: Optional[RectangleIntegrator] = None,
) -> ProbEstimate:
    """Probability of the region under N(mean, cov)"""
    if integrator is None:
        integrator = RectangleIntegrator(abs_tol=abs_tol)
    eps, a, b = region.box(params)
    return integrator.probability(eps, a, b)
