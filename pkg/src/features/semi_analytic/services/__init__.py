from .box_moments_service import (
    BoxMoments,
    PartialCorrelationSet,
    marginal_bivariate,
    marginal_univariate,
    partial_correlations,
    rect_first_moment,
    rect_second_moment,
)
from .region_service import RegionTruncation, index_subsets, region_integral, truncation_of
from .semi_analytic_service import estimate_semianalytic

__all__ = [
    'BoxMoments',
    'PartialCorrelationSet',
    'RegionTruncation',
    'estimate_semianalytic',
    'index_subsets',
    'marginal_bivariate',
    'marginal_univariate',
    'partial_correlations',
    'rect_first_moment',
    'rect_second_moment',
    'region_integral',
    'truncation_of',
]
