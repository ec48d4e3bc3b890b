"""Core ViewModels"""

from .base_viewmodel import BaseViewModel

__all__ = ['BaseViewModel']
