"""Result model shared by all three estimators"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np


@dataclass
class TruncationSummary:
    """Integral Z, truncated mean and truncated covariance of one distribution"""
    z: float
    z_log: float
    mean_t: np.ndarray
    cov_t: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_log(cls, z_log: float, mean_t, cov_t, diagnostics=None) -> "TruncationSummary":
        return cls(
            z=math.exp(z_log),
            z_log=float(z_log),
            mean_t=np.asarray(mean_t, dtype=np.float64),
            cov_t=np.asarray(cov_t, dtype=np.float64),
            diagnostics=dict(diagnostics or {}),
        )

    @property
    def dim(self) -> int:
        return len(self.mean_t)

    def invariant_violations(self, mean_tol: float = 1e-9, cov_tol: float = 1e-9) -> List[str]:
        """
        Check the structural properties every estimate must have.

        Args:
            mean_tol: Slack allowed on the simplex constraints for mean_t
            cov_tol: Relative slack on the smallest eigenvalue of cov_t

        Returns:
            Human-readable list of violations, empty when all hold
        """
        problems = []
        if not (0.0 < self.z <= 1.0):
            problems.append(f"z={self.z} outside (0, 1]")
        elif not math.isclose(math.exp(self.z_log), self.z, rel_tol=1e-12):
            problems.append(f"exp(z_log)={math.exp(self.z_log)} differs from z={self.z}")

        mean = self.mean_t
        if not np.all(np.isfinite(mean)):
            problems.append("mean_t not finite")
        else:
            if np.min(mean) < -mean_tol:
                problems.append(f"mean_t has negative entry {np.min(mean)}")
            if np.sum(mean) > 1.0 + mean_tol:
                problems.append(f"mean_t sums to {np.sum(mean)}")

        cov = self.cov_t
        if not np.all(np.isfinite(cov)):
            problems.append("cov_t not finite")
        else:
            if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(np.max(np.abs(cov)), 1e-300)):
                problems.append("cov_t not symmetric")
            eig = np.linalg.eigvalsh(0.5 * (cov + cov.T))
            if eig[0] < -cov_tol * max(eig[-1], 0.0):
                problems.append(f"cov_t smallest eigenvalue {eig[0]}")
        return problems
