from .gaussian_service import (
    CholeskyFactor,
    GaussianParams,
    cholesky,
    log_density,
    sample_mvn,
    validate_params,
)

__all__ = [
    'CholeskyFactor',
    'GaussianParams',
    'cholesky',
    'log_density',
    'sample_mvn',
    'validate_params',
]
