from .constraints_service import (
    LinearConstraints,
    initial_point,
    shifted_constraints,
    simplex_constraints,
)
from .liness_service import (
    ArcSet,
    active_arcs,
    constraint_intersections,
    ellipse_point,
    liness_step,
    sample_liness,
)

__all__ = [
    'ArcSet',
    'LinearConstraints',
    'active_arcs',
    'constraint_intersections',
    'ellipse_point',
    'initial_point',
    'liness_step',
    'sample_liness',
    'shifted_constraints',
    'simplex_constraints',
]
