"""Exception hierarchy shared by every feature.

Each class carries the process exit code the CLI maps it to.
"""

from typing import Any, Dict, Optional


class StgError(Exception):
    """Base class for all errors raised by this package"""

    exit_code = 3


# --- validation (exit 2) ---------------------------------------------------

class ValidationError(StgError):
    """Input rejected before any computation started"""

    exit_code = 2


class DimensionMismatchError(ValidationError):
    pass


class NotSymmetricError(ValidationError):
    pass


class NotPositiveDefiniteError(ValidationError):
    pass


class NegativeShiftError(ValidationError):
    pass


class InfeasibleStartError(ValidationError):
    """A chain start point does not strictly satisfy its constraints"""


class ConfigError(ValidationError):
    """Malformed configuration file or experiment definition"""


# --- method failures (exit 3) ----------------------------------------------

class MethodError(StgError):
    """A numerical method could not produce a trustworthy result"""

    exit_code = 3

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class FactorizationFailedError(MethodError):
    pass


class BudgetExceededError(MethodError):
    """QMC budget ran out before the error target was met.

    The achieved estimate is attached as ``estimate``.
    """

    def __init__(self, message: str, estimate: Any):
        super().__init__(message, {"abs_error": getattr(estimate, "abs_error", None)})
        self.estimate = estimate


class AcceptanceTooLowError(MethodError):
    pass


class DegenerateEllipseError(MethodError):
    pass


class EmptyArcSetError(MethodError):
    pass


class LevelStallError(MethodError):
    pass


class MaxLevelsExceededError(MethodError):
    pass


class ZeroCountError(MethodError):
    """No chain sample fell inside the next nested domain"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message, diagnostics)
        self.log_z = float("-inf")


class ZeroIntegralError(MethodError):
    """Inclusion-exclusion cancellation left no significant digits"""

    def __init__(self, message: str, z: float, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message, diagnostics)
        self.z = z


class NearSingularCorrelationError(MethodError):
    pass


class SamplingStalledError(MethodError):
    pass


# --- output (exit 4) -------------------------------------------------------

class OutputUnwritableError(StgError):
    exit_code = 4
