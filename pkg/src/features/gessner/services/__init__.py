from .gessner_service import (
    GessnerConfig,
    HdrEstimate,
    LevelSchedule,
    estimate_gessner,
    hdr_estimate,
    shift_value,
    subset_simulation,
)

__all__ = [
    'GessnerConfig',
    'HdrEstimate',
    'LevelSchedule',
    'estimate_gessner',
    'hdr_estimate',
    'shift_value',
    'subset_simulation',
]
