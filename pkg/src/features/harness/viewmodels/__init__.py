from .comparison_viewmodel import ComparisonViewModel

__all__ = ['ComparisonViewModel']
