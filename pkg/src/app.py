"""
stg - command-line front end
Subcommands: estimate, compare, sample-params
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from core.errors import ConfigError, OutputUnwritableError, StgError, ValidationError
from core.models.truncation_summary import TruncationSummary
from core.services.config_service import ConfigService
from core.services.logging_service import configure_logging

logger = logging.getLogger('stg')

EXIT_OK = 0


def parse_vector(text: str) -> np.ndarray:
    """Comma- or whitespace-separated decimals"""
    parts = text.replace(',', ' ').split()
    try:
        return np.array([float(p) for p in parts])
    except ValueError as e:
        raise ValidationError(f"parse_vector: cannot parse {text!r}: {e}") from e


def parse_matrix(text: str) -> np.ndarray:
    """
    Covariance from a file path or an inline value.

    A file holds n lines of n whitespace-separated decimals. Inline rows are
    separated by ';', entries by ',' or spaces.
    """
    path = Path(text)
    if path.is_file():
        try:
            rows = [line for line in path.read_text(encoding='utf-8').splitlines() if line.strip()]
        except OSError as e:
            raise ValidationError(f"parse_matrix: cannot read {path}: {e}") from e
    else:
        rows = [row for row in text.split(';') if row.strip()]
    vectors = [parse_vector(row) for row in rows]
    if not vectors or any(len(v) != len(vectors[0]) for v in vectors):
        raise ValidationError(f"parse_matrix: rows of unequal length in {text!r}")
    return np.vstack(vectors)


def parse_dims(text: str) -> List[int]:
    """'2..5' or '2,3,7'"""
    try:
        if '..' in text:
            lo, hi = text.split('..', 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(p) for p in text.replace(',', ' ').split()]
    except ValueError as e:
        raise ValidationError(f"parse_dims: cannot parse {text!r}") from e


def parse_methods(text: str) -> List[str]:
    from features.harness.services import METHODS
    if text == 'all':
        return list(METHODS)
    return [m.strip() for m in text.split(',') if m.strip()]


def _build_gessner_config(args, config: ConfigService):
    from features.gessner.services import GessnerConfig
    return _apply_gessner_flags(GessnerConfig.from_mapping(config.section('gessner')), args)


def _apply_gessner_flags(gessner, args):
    """--samples and --thin over a loaded GessnerConfig"""
    if getattr(args, 'samples', None):
        gessner = dataclasses.replace(gessner, m_hdr=args.samples, m_moments=args.samples)
    if getattr(args, 'thin', None):
        gessner = gessner.with_uniform_thinning(args.thin)
    return gessner


def _cli_abs_tol(args, config: ConfigService) -> Optional[float]:
    """Tolerance named on the command line, None when neither flag is given"""
    if getattr(args, 'high_accuracy', False):
        return float(config.get('semianalytic.high_accuracy_abs_tol'))
    return getattr(args, 'abs_tol', None)


def _abs_tol(args, config: ConfigService) -> float:
    explicit = _cli_abs_tol(args, config)
    return float(config.get('semianalytic.abs_tol')) if explicit is None else explicit


def _qmc_settings(config: ConfigService) -> dict:
    return {
        'max_evaluations': int(config.get('mvn_cdf.max_evaluations')),
        'shifts': int(config.get('mvn_cdf.shifts')),
    }


def _summary_json(summary: TruncationSummary, method: str) -> dict:
    def plain(value):
        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        return value

    return {
        'method': method,
        'z': summary.z,
        'z_log': summary.z_log,
        'mean_t': summary.mean_t.tolist(),
        'cov_t': summary.cov_t.tolist(),
        'diagnostics': {k: plain(v) for k, v in summary.diagnostics.items()},
    }


def _print_summary(summary: TruncationSummary, method: str):
    print(f"method: {method}")
    print(f"z:      {summary.z!r}")
    print(f"z_log:  {summary.z_log!r}")
    print("mean_t: " + ' '.join(repr(float(v)) for v in summary.mean_t))
    print("cov_t:")
    for row in summary.cov_t:
        print("  " + ' '.join(repr(float(v)) for v in row))
    for key in ('z_se', 'levels', 'm_kept', 'm_total', 'ess_min', 'regions', 'rect_prob_calls', 'wall_seconds'):
        if key in summary.diagnostics:
            print(f"{key}: {summary.diagnostics[key]}")


def cmd_estimate(args, config: ConfigService) -> int:
    from features.gaussian.services import validate_params
    from features.gessner.services import estimate_gessner
    from features.rejection.services import estimate_rejection
    from features.semi_analytic.services import estimate_semianalytic

    params = validate_params(parse_vector(args.mean), parse_matrix(args.cov))
    seed = args.seed if args.seed is not None else int(config.get('harness.seed', 0))

    if args.method == 'rejection':
        m_target = args.samples or int(config.get('rejection.m_target'))
        max_trials = args.max_trials or int(config.get('rejection.max_trials'))
        summary = estimate_rejection(params, m_target, max_trials, np.random.default_rng(seed))
    elif args.method == 'gessner':
        gessner = dataclasses.replace(_build_gessner_config(args, config), seed=seed)
        summary = estimate_gessner(params, gessner)
    else:
        from features.harness.services import method_seed
        qmc_seed = method_seed(args.seed, 'semianalytic') if args.seed is not None else int(config.get('mvn_cdf.seed'))
        summary = estimate_semianalytic(
            params,
            _abs_tol(args, config),
            max_workers=args.workers or 1,
            seed=qmc_seed,
            **_qmc_settings(config),
        )

    if args.json:
        print(json.dumps(_summary_json(summary, args.method), indent=2))
    else:
        _print_summary(summary, args.method)
    return EXIT_OK


def _experiment_config(args, config: ConfigService):
    from features.gessner.services import GessnerConfig
    from features.harness.services import ExperimentConfig

    if args.config:
        experiment = ExperimentConfig.from_yaml(args.config)
    else:
        experiment = ExperimentConfig(
            dims=tuple(parse_dims(args.dims or '2')),
            count_per_dim=int(config.get('harness.count_per_dim')),
            master_seed=int(config.get('harness.seed', 0)),
            m_target=int(config.get('rejection.m_target')),
            max_trials=int(config.get('rejection.max_trials')),
            gessner=GessnerConfig.from_mapping(config.section('gessner')),
            abs_tol=float(config.get('semianalytic.abs_tol')),
            **_qmc_settings(config),
            output_dir=Path(config.get('harness.output_dir')),
            workers=int(config.get('harness.workers')),
        )

    overrides = {}
    if args.config and args.dims:
        overrides['dims'] = tuple(parse_dims(args.dims))
    if args.count is not None:
        overrides['count_per_dim'] = args.count
    if args.methods:
        overrides['methods'] = tuple(parse_methods(args.methods))
    if args.seed is not None:
        overrides['master_seed'] = args.seed
    if args.out:
        overrides['output_dir'] = Path(args.out)
    if args.workers is not None:
        overrides['workers'] = args.workers
    if args.force:
        overrides['force'] = True
    if args.samples:
        overrides['m_target'] = args.samples
    gessner = _apply_gessner_flags(experiment.gessner, args)
    if gessner != experiment.gessner:
        overrides['gessner'] = gessner
    abs_tol = _cli_abs_tol(args, config)
    if abs_tol is not None:
        overrides['abs_tol'] = abs_tol
    try:
        return dataclasses.replace(experiment, **overrides)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"compare: {e}") from e


def cmd_compare(args, config: ConfigService) -> int:
    from features.harness.viewmodels import ComparisonViewModel

    experiment = _experiment_config(args, config)
    viewmodel = ComparisonViewModel(experiment)

    def on_progress(vm: ComparisonViewModel):
        if vm.is_running and vm.last_batch:
            first = vm.last_batch[0]
            failed = [r.method for r in vm.last_batch if not r.ok]
            suffix = f" (errors: {', '.join(failed)})" if failed else ''
            logger.info(f"compare: {vm.done}/{vm.total} dim={first.dim} index={first.distribution_index}{suffix}")

    viewmodel.add_listener(on_progress)
    try:
        viewmodel.run()
    finally:
        viewmodel.dispose()
    for name, path in sorted(viewmodel.written.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_sample_params(args, config: ConfigService) -> int:
    from features.harness.services import child_seed, sample_experiment_params

    master = args.seed if args.seed is not None else int(config.get('harness.seed', 0))
    out = []
    for index in range(args.count):
        seed = child_seed(master, args.dim, index)
        params = sample_experiment_params(args.dim, np.random.default_rng(seed))
        out.append({
            'dim': args.dim,
            'distribution_index': index,
            'seed': seed,
            'mean': params.mean.tolist(),
            'cov': params.cov.tolist(),
        })
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='stg',
        description='Integral, mean and covariance of multivariate normals truncated to the unit simplex.',
    )
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--log-file', default=None, help='also write a debug log to this file')
    sub = parser.add_subparsers(dest='command', required=True)

    est = sub.add_parser('estimate', help='estimate one distribution')
    est.add_argument('--method', required=True, choices=['rejection', 'gessner', 'semianalytic'])
    est.add_argument('--mean', required=True, help='comma-separated mean vector')
    est.add_argument('--cov', required=True, help="covariance file, or inline rows 'a,b;c,d'")
    est.add_argument('--samples', type=int, default=None, help='accepted samples (rejection) or samples per level and moment chain length (gessner)')
    est.add_argument('--max-trials', type=int, default=None)
    est.add_argument('--abs-tol', type=float, default=None)
    est.add_argument('--high-accuracy', action='store_true', help='semianalytic abs_tol 1e-6')
    est.add_argument('--thin', type=int, default=None, help='thinning of the gessner integral and moment chains')
    est.add_argument('--workers', type=int, default=None, help='semianalytic region threads')
    est.add_argument('--seed', type=int, default=None)
    est.add_argument('--json', action='store_true')
    est.set_defaults(handler=cmd_estimate)

    cmp_ = sub.add_parser('compare', help='run the multi-method comparison experiment')
    cmp_.add_argument('--config', default=None, help='experiment YAML file')
    cmp_.add_argument('--dims', default=None, help="'2..5' or '2,3'")
    cmp_.add_argument('--count', type=int, default=None)
    cmp_.add_argument('--methods', default=None, help="'all' or a comma-separated subset")
    cmp_.add_argument('--seed', type=int, default=None)
    cmp_.add_argument('--out', default=None)
    cmp_.add_argument('--workers', type=int, default=None)
    cmp_.add_argument('--samples', type=int, default=None)
    cmp_.add_argument('--abs-tol', type=float, default=None)
    cmp_.add_argument('--high-accuracy', action='store_true')
    cmp_.add_argument('--thin', type=int, default=None)
    cmp_.add_argument('--force', action='store_true', help='run methods beyond their dimension cutoffs')
    cmp_.set_defaults(handler=cmd_compare)

    smp = sub.add_parser('sample-params', help='print experiment distributions as JSON')
    smp.add_argument('--dim', type=int, required=True)
    smp.add_argument('--count', type=int, default=1)
    smp.add_argument('--seed', type=int, default=None)
    smp.set_defaults(handler=cmd_sample_params)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, configure logging, dispatch; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = ConfigService()
        configure_logging(args.log_level or config.get('logging.level'), args.log_file or config.get('logging.file'))
        return args.handler(args, config)
    except StgError as e:
        logger.debug("main: failed", exc_info=True)
        print(f"stg: error: {e}", file=sys.stderr)
        return e.exit_code
    except BrokenPipeError:
        return OutputUnwritableError.exit_code
