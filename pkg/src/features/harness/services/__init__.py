from .comparison_service import (
    METHODS,
    ComparisonRecord,
    ExperimentConfig,
    run_comparison,
    run_distribution,
    run_method,
)
from .params_sampling_service import sample_experiment_params
from .report_service import agreement_rows, build_summary, report, timing_summary
from .seeding_service import child_seed, method_seed, splitmix64

__all__ = [
    'METHODS',
    'ComparisonRecord',
    'ExperimentConfig',
    'agreement_rows',
    'build_summary',
    'child_seed',
    'method_seed',
    'report',
    'run_comparison',
    'run_distribution',
    'run_method',
    'sample_experiment_params',
    'splitmix64',
    'timing_summary',
]
