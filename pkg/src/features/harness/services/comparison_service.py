"""Run every requested method on identical random distributions"""

import dataclasses
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from core.errors import ConfigError, StgError
from core.models.truncation_summary import TruncationSummary
from core.services.config_service import load_yaml_file
from features.gaussian.services import GaussianParams
from features.gessner.services import GessnerConfig, estimate_gessner
from features.harness.services.params_sampling_service import sample_experiment_params
from features.harness.services.seeding_service import child_seed, method_seed
from features.mvn_cdf.services import DEFAULT_MAX_EVALUATIONS, DEFAULT_SHIFTS
from features.rejection.services import estimate_rejection
from features.semi_analytic.services import estimate_semianalytic

logger = logging.getLogger(__name__)

METHODS = ('rejection', 'gessner', 'semianalytic')
DEFAULT_CUTOFFS = {'rejection': 7, 'gessner': 10, 'semianalytic': 5}
# relative eigenvalue slack on cov_t; inclusion-exclusion accumulates box-probability error
INVARIANT_TOLERANCES = {'rejection': 1e-9, 'gessner': 1e-9, 'semianalytic': 1e-6}


@dataclass(frozen=True)
class ExperimentConfig:
    """Dimensions, methods and per-method settings of one comparison run"""
    dims: Tuple[int, ...] = (2,)
    count_per_dim: int = 100
    methods: Tuple[str, ...] = METHODS
    master_seed: int = 0
    m_target: int = 10_000
    max_trials: int = 100_000_000
    gessner: GessnerConfig = field(default_factory=GessnerConfig)
    abs_tol: float = 1e-4
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS
    shifts: int = DEFAULT_SHIFTS
    output_dir: Path = Path('stg-output')
    force: bool = False
    workers: int = 1
    cutoffs: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_CUTOFFS))

    def __post_init__(self):
        object.__setattr__(self, 'dims', tuple(int(d) for d in self.dims))
        object.__setattr__(self, 'methods', tuple(self.methods))
        object.__setattr__(self, 'output_dir', Path(self.output_dir))
        if not self.dims or any(d < 2 for d in self.dims):
            raise ConfigError(f"ExperimentConfig: dims must all be >= 2, got {list(self.dims)}")
        if self.count_per_dim < 1:
            raise ConfigError(f"ExperimentConfig: count_per_dim must be >= 1, got {self.count_per_dim}")
        if not self.methods:
            raise ConfigError("ExperimentConfig: at least one method is required")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"ExperimentConfig: unknown methods {unknown}, expected a subset of {list(METHODS)}")
        if self.workers < 1:
            raise ConfigError(f"ExperimentConfig: workers must be >= 1, got {self.workers}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "ExperimentConfig":
        values = dict(values)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ConfigError(f"ExperimentConfig: unknown fields {sorted(unknown)}")
        if isinstance(values.get('gessner'), Mapping):
            values['gessner'] = GessnerConfig.from_mapping(values['gessner'])
        if 'cutoffs' in values:
            values['cutoffs'] = {**DEFAULT_CUTOFFS, **values['cutoffs']}
        try:
            return cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"ExperimentConfig: {e}") from e

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(load_yaml_file(Path(path)))


@dataclass
class ComparisonRecord:
    """One (distribution, method) cell of a comparison run"""
    dim: int
    distribution_index: int
    method: str
    seed: int
    z: Optional[float] = None
    z_log: Optional[float] = None
    mean_t: Tuple[float, ...] = ()
    cov_t: Tuple[float, ...] = ()  # upper triangle, row-major
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    wall_seconds: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def sort_key(self):
        return (self.dim, self.distribution_index, METHODS.index(self.method))


def upper_triangle(matrix) -> Tuple[float, ...]:
    matrix = np.asarray(matrix, dtype=np.float64)
    iu = np.triu_indices(matrix.shape[0])
    return tuple(float(v) for v in matrix[iu])


def _plain(value: Any) -> Any:
    """Diagnostics with arrays turned into lists (upper triangles for square matrices)"""
    if isinstance(value, np.ndarray):
        if value.ndim == 2 and value.shape[0] == value.shape[1]:
            return list(upper_triangle(value))
        return [float(v) for v in value.ravel()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def run_method(method: str, params: GaussianParams, config: ExperimentConfig, seed: int) -> TruncationSummary:
    """Dispatch one estimator with its settings and cell seed"""
    if method == 'rejection':
        return estimate_rejection(params, config.m_target, config.max_trials, np.random.default_rng(seed))
    if method == 'gessner':
        return estimate_gessner(params, dataclasses.replace(config.gessner, seed=seed))
    if method == 'semianalytic':
        return estimate_semianalytic(
            params,
            config.abs_tol,
            seed=seed,
            max_evaluations=config.max_evaluations,
            shifts=config.shifts,
        )
    raise ConfigError(f"run_method: unknown method {method!r}")


def _run_cell(method: str, params: GaussianParams, config: ExperimentConfig, dim: int, index: int, child: int) -> ComparisonRecord:
    seed = method_seed(child, method)
    record = ComparisonRecord(dim=dim, distribution_index=index, method=method, seed=seed)

    cutoff = config.cutoffs.get(method)
    if cutoff is not None and dim > cutoff:
        if not config.force:
            record.error = f"Skipped: dimension {dim} beyond {method} cutoff {cutoff}"
            return record
        logger.warning(f"run_comparison: running {method} at dim {dim} beyond its cutoff {cutoff}")

    started = time.perf_counter()
    try:
        summary = run_method(method, params, config, seed)
    except StgError as e:
        record.wall_seconds = time.perf_counter() - started
        record.error = f"{type(e).__name__}: {e}"
        record.diagnostics = {k: _plain(v) for k, v in getattr(e, 'diagnostics', {}).items()}
        logger.info(f"run_comparison: dim={dim} index={index} {method} failed: {record.error}")
        return record
    record.wall_seconds = time.perf_counter() - started

    record.z = summary.z
    record.z_log = summary.z_log
    record.mean_t = tuple(float(v) for v in summary.mean_t)
    record.cov_t = upper_triangle(summary.cov_t)
    record.diagnostics = {k: _plain(v) for k, v in summary.diagnostics.items() if k != 'wall_seconds'}

    tol = INVARIANT_TOLERANCES[method]
    mean_tol = 1e-6 if method == 'semianalytic' else 1e-9
    problems = summary.invariant_violations(mean_tol=mean_tol, cov_tol=tol)
    if problems:
        record.error = "InvariantViolation: " + "; ".join(problems)
    return record


def run_distribution(config: ExperimentConfig, dim: int, index: int) -> List[ComparisonRecord]:
    """Sample one distribution and run every configured method on it"""
    child = child_seed(config.master_seed, dim, index)
    params = sample_experiment_params(dim, np.random.default_rng(child))
    return [_run_cell(method, params, config, dim, index, child) for method in config.methods]


def run_comparison(
    config: ExperimentConfig,
    on_distribution_done: Optional[Callable[[List[ComparisonRecord]], None]] = None,
) -> List[ComparisonRecord]:
    """
    Run the configured methods on count_per_dim random distributions per dimension.

    Records come back sorted by (dim, index, method), whatever the worker count.
    """
    cells = [(dim, index) for dim in config.dims for index in range(config.count_per_dim)]
    records: List[ComparisonRecord] = []

    def collect(batch: List[ComparisonRecord]):
        records.extend(batch)
        if on_distribution_done is not None:
            on_distribution_done(batch)

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(run_distribution, config, dim, index) for dim, index in cells]
            for future in futures:
                collect(future.result())
    else:
        for dim, index in cells:
            collect(run_distribution(config, dim, index))

    records.sort(key=lambda r: r.sort_key)
    return records
