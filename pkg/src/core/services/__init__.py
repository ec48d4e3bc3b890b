"""Core services"""

from .config_service import ConfigService
from .logging_service import configure_logging

__all__ = ['ConfigService', 'configure_logging']
