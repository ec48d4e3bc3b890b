from .lattice_service import cbc_lattice
from .mvn_cdf_service import (
    DEFAULT_MAX_EVALUATIONS,
    DEFAULT_SEED,
    DEFAULT_SHIFTS,
    HyperRectangle,
    ProbEstimate,
    RectangleIntegrator,
    box_probability,
    normal_cdf,
    rect_prob,
)

__all__ = [
    'DEFAULT_MAX_EVALUATIONS',
    'DEFAULT_SEED',
    'DEFAULT_SHIFTS',
    'HyperRectangle',
    'ProbEstimate',
    'RectangleIntegrator',
    'box_probability',
    'cbc_lattice',
    'normal_cdf',
    'rect_prob',
]
