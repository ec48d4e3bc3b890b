"""Linear domain constraints A y + c >= 0 in mean-centred coordinates y = x - mean"""

from dataclasses import dataclass

import numpy as np

from core.errors import DimensionMismatchError, NegativeShiftError, ValidationError
from features.gaussian.services import GaussianParams


@dataclass(frozen=True)
class LinearConstraints:
    """Rows a_i, offsets c_i of the half-spaces a_i . y + c_i >= 0"""
    a_matrix: np.ndarray
    c_vector: np.ndarray

    def __post_init__(self):
        a = np.array(self.a_matrix, dtype=np.float64)
        c = np.array(self.c_vector, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1:
            raise DimensionMismatchError(f"LinearConstraints: A must be a non-empty matrix, got shape {a.shape}")
        if c.shape != (a.shape[0],):
            raise DimensionMismatchError(f"LinearConstraints: c shape {c.shape} does not match {a.shape[0]} rows")
        zero_rows = np.flatnonzero(~np.any(a != 0.0, axis=1))
        if len(zero_rows):
            raise ValidationError(f"LinearConstraints: row {int(zero_rows[0])} of A is all zero")
        a.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, 'a_matrix', a)
        object.__setattr__(self, 'c_vector', c)

    @property
    def dim(self) -> int:
        return int(self.a_matrix.shape[1])

    @property
    def rows(self) -> int:
        return int(self.a_matrix.shape[0])

    def margins(self, y) -> np.ndarray:
        """A y + c for one point (n,) or many points (N, n)"""
        y = np.asarray(y, dtype=np.float64)
        return y @ self.a_matrix.T + self.c_vector

    def shift_values(self, y) -> np.ndarray:
        """Violation depth g = -min(A y + c), per point"""
        return -np.min(self.margins(y), axis=-1)


def simplex_constraints(params: GaussianParams) -> LinearConstraints:
    """
    Constraints of the region x >= 0, sum(x) <= 1 written in y = x - mean.

    The first row is the sum constraint (all -1, offset 1 - sum(mean)); the
    identity rows follow with offsets mean.
    """
    n = params.dim
    a = np.vstack([-np.ones((1, n)), np.eye(n)])
    c = np.concatenate([[1.0 - np.sum(params.mean)], params.mean])
    return LinearConstraints(a, c)


def shifted_constraints(base: LinearConstraints, gamma: float) -> LinearConstraints:
    """Loosen every constraint by gamma: c' = c + gamma"""
    if gamma < 0:
        raise NegativeShiftError(f"shifted_constraints: gamma must be >= 0, got {gamma}")
    if gamma == 0:
        return base
    return LinearConstraints(base.a_matrix, base.c_vector + gamma)


def initial_point(params: GaussianParams) -> np.ndarray:
    """Simplex centroid in centred coordinates; every margin equals 1/(n+1)"""
    n = params.dim
    return np.full(n, 1.0 / (n + 1)) - params.mean
