"""Core utilities, models and services"""

__all__ = ['errors', 'models', 'services', 'viewmodels']
