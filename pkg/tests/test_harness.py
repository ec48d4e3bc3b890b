from __future__ import annotations

import json
import math

import numpy as np
import pytest

from core.errors import ConfigError, OutputUnwritableError, ValidationError
from features.gessner.services import GessnerConfig
from features.harness.services import (
    ComparisonRecord,
    ExperimentConfig,
    agreement_rows,
    build_summary,
    child_seed,
    method_seed,
    report,
    run_comparison,
    sample_experiment_params,
    splitmix64,
    timing_summary,
)
from features.harness.services.report_service import RECORD_COLUMNS
from features.harness.viewmodels import ComparisonViewModel

FAST_GESSNER = GessnerConfig(m_hdr=500, m_moments=500)


def _fast_config(tmp_path, **overrides) -> ExperimentConfig:
    values = dict(
        dims=(2,),
        count_per_dim=2,
        m_target=1000,
        gessner=FAST_GESSNER,
        output_dir=tmp_path / 'out',
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def _record(dim: int, index: int, method: str, z: float, wall: float = 1.0, error: str | None = None) -> ComparisonRecord:
    n_cov = dim * (dim + 1) // 2
    return ComparisonRecord(
        dim=dim,
        distribution_index=index,
        method=method,
        seed=index,
        z=None if error else z,
        z_log=None if error else math.log(z),
        mean_t=() if error else tuple([0.2] * dim),
        cov_t=() if error else tuple([0.01] * n_cov),
        diagnostics={} if error else {'z_se': 0.01, 'mean_se': [0.001] * dim, 'cov_se': [0.001] * n_cov},
        wall_seconds=wall,
        error=error,
    )


def test_splitmix64_reference_value() -> None:
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_child_seeds_unique() -> None:
    seeds = {child_seed(0, dim, index) for dim in range(2, 11) for index in range(200)}
    assert len(seeds) == 9 * 200


def test_method_seeds_distinct() -> None:
    child = child_seed(123, 3, 7)
    seeds = {method_seed(child, m) for m in ('rejection', 'gessner', 'semianalytic')}
    assert len(seeds) == 3
    assert child not in seeds


def test_child_seed_depends_on_master() -> None:
    assert child_seed(0, 2, 0) != child_seed(1, 2, 0)


@pytest.mark.parametrize('n', [2, 3, 5, 8])
def test_experiment_params_protocol(n: int) -> None:
    rng = np.random.default_rng(n)
    for _ in range(20):
        params = sample_experiment_params(n, rng)
        assert np.all((params.mean >= 0) & (params.mean <= 1))
        assert params.mean.sum() <= 1.0
        diag = np.diag(params.cov)
        assert np.all((diag >= 0) & (diag <= 0.25))
        assert np.array_equal(params.cov, params.cov.T)
        assert np.linalg.eigvalsh(params.cov)[0] > 0


def test_experiment_params_deterministic() -> None:
    a = sample_experiment_params(3, np.random.default_rng(99))
    b = sample_experiment_params(3, np.random.default_rng(99))
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.cov, b.cov)


def test_experiment_params_dimension_check() -> None:
    with pytest.raises(ValidationError):
        sample_experiment_params(1, np.random.default_rng(0))


@pytest.mark.parametrize(
    'values',
    [{'dims': (1,)}, {'dims': ()}, {'count_per_dim': 0}, {'methods': ()}, {'methods': ('mcmc',)}, {'workers': 0}],
)
def test_experiment_config_validation(values) -> None:
    with pytest.raises(ConfigError):
        ExperimentConfig(**values)


def test_experiment_config_from_yaml(tmp_path) -> None:
    path = tmp_path / 'experiment.yaml'
    path.write_text(
        'dims: [2, 3]\n'
        'count_per_dim: 5\n'
        'methods: [rejection, semianalytic]\n'
        'gessner:\n'
        '  thin_moments: 10\n'
        'cutoffs:\n'
        '  semianalytic: 6\n',
        encoding='utf-8',
    )
    config = ExperimentConfig.from_yaml(path)
    assert config.dims == (2, 3)
    assert config.methods == ('rejection', 'semianalytic')
    assert config.gessner.thin_moments == 10
    assert config.cutoffs == {'rejection': 7, 'gessner': 10, 'semianalytic': 6}


def test_experiment_config_unknown_field() -> None:
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({'dimensions': [2]})


def test_run_all_methods(tmp_path) -> None:
    records = run_comparison(_fast_config(tmp_path, count_per_dim=3, abs_tol=1e-6))
    assert len(records) == 9
    assert [(r.distribution_index, r.method) for r in records[:3]] == [
        (0, 'rejection'),
        (0, 'gessner'),
        (0, 'semianalytic'),
    ]
    for record in records:
        assert record.error is None, record.error
        assert len(record.mean_t) == 2
        assert len(record.cov_t) == 3
        assert 0.0 < record.z <= 1.0

    for index in range(3):
        by_method = {r.method: r for r in records if r.distribution_index == index}
        rejection, semi = by_method['rejection'], by_method['semianalytic']
        combined = math.hypot(rejection.diagnostics['z_se'], semi.diagnostics['z_se'])
        assert abs(rejection.z - semi.z) <= 4 * combined


def test_run_records_identical_params_across_methods(tmp_path) -> None:
    records = run_comparison(_fast_config(tmp_path, count_per_dim=1))
    child = child_seed(0, 2, 0)
    assert {r.seed for r in records} == {method_seed(child, m) for m in ('rejection', 'gessner', 'semianalytic')}


def test_run_skips_beyond_cutoff(tmp_path) -> None:
    records = run_comparison(_fast_config(tmp_path, dims=(6,), count_per_dim=1, methods=('semianalytic',)))
    assert len(records) == 1
    assert records[0].error.startswith('Skipped')
    assert records[0].z is None


def test_run_forced_beyond_cutoff_warns(tmp_path, caplog) -> None:
    config = _fast_config(
        tmp_path,
        dims=(3,),
        count_per_dim=1,
        methods=('rejection',),
        cutoffs={'rejection': 2, 'gessner': 10, 'semianalytic': 5},
        force=True,
    )
    records = run_comparison(config)
    assert records[0].error is None
    assert 'beyond its cutoff' in caplog.text


def test_region_calls_grow_with_dimension(tmp_path) -> None:
    records = run_comparison(_fast_config(tmp_path, dims=(2, 3), count_per_dim=1, methods=('semianalytic',)))
    calls = {r.dim: r.diagnostics['region_phi_calls'] for r in records if r.ok}
    for dim, count in calls.items():
        assert count == 2 ** (dim + 1) - 2


def test_rerun_writes_identical_records(tmp_path) -> None:
    first = report(run_comparison(_fast_config(tmp_path)), tmp_path / 'a')
    second = report(run_comparison(_fast_config(tmp_path)), tmp_path / 'b')
    assert first['records'].read_bytes() == second['records'].read_bytes()
    assert first['agreement'].read_bytes() == second['agreement'].read_bytes()


def test_worker_pool_matches_serial(tmp_path) -> None:
    serial = run_comparison(_fast_config(tmp_path, methods=('rejection',), count_per_dim=3))
    pooled = run_comparison(_fast_config(tmp_path, methods=('rejection',), count_per_dim=3, workers=2))
    assert [(r.dim, r.distribution_index, r.seed, r.z, r.mean_t, r.cov_t) for r in serial] == [
        (r.dim, r.distribution_index, r.seed, r.z, r.mean_t, r.cov_t) for r in pooled
    ]


def test_records_csv_layout(tmp_path) -> None:
    records = [_record(2, i, m, 0.5) for i in range(10) for m in ('rejection', 'gessner', 'semianalytic')]
    written = report(records, tmp_path)
    text = written['records'].read_text(encoding='utf-8')
    lines = text.split('\n')
    assert len(text.splitlines()) == 31
    assert lines[0] == ','.join(RECORD_COLUMNS)
    assert '\r' not in text
    assert lines[1].startswith('2,0,rejection,0,0.5,')


def test_record_columns_frozen() -> None:
    assert RECORD_COLUMNS == (
        'dim',
        'distribution_index',
        'method',
        'seed',
        'z',
        'z_log',
        'z_se',
        'mean_t',
        'mean_se',
        'cov_t',
        'cov_se',
        'levels',
        'region_phi_calls',
        'rect_prob_calls',
        'error',
    )


def test_timing_percentiles() -> None:
    records = [_record(2, i, 'rejection', 0.5, wall=float(i + 1)) for i in range(100)]
    entry = timing_summary(records)['2']['rejection']
    assert entry['median'] == pytest.approx(50.5)
    assert entry['p16'] == pytest.approx(16.84)
    assert entry['p84'] == pytest.approx(84.16)
    assert entry['errors'] == 0


def test_timing_counts_errors() -> None:
    records = [_record(3, 0, 'gessner', 0.5), _record(3, 1, 'gessner', 0.5, error='ZeroCountError: none')]
    entry = timing_summary(records)['3']['gessner']
    assert entry['records'] == 2
    assert entry['errors'] == 1
    assert entry['median'] == 1.0


def test_summary_json_round_trip(tmp_path) -> None:
    records = [_record(2, i, m, 0.5 + 0.01 * i) for i in range(4) for m in ('rejection', 'semianalytic')]
    written = report(records, tmp_path)
    with open(written['summary'], encoding='utf-8') as f:
        assert json.load(f) == build_summary(records)


def test_agreement_rows() -> None:
    records = [_record(2, 0, 'rejection', 0.50), _record(2, 0, 'gessner', 0.53), _record(2, 0, 'semianalytic', 0.5)]
    rows = agreement_rows(records)
    # 3 pairs x (z + 2 means + 3 covariances)
    assert len(rows) == 18
    z_row = next(r for r in rows if r['method_a'] == 'rejection' and r['method_b'] == 'gessner' and r['quantity'] == 'z')
    assert z_row['deviation'] == pytest.approx(-0.03)
    assert z_row['z_score'] == pytest.approx(-0.03 / math.sqrt(2 * 0.01 ** 2))


def test_agreement_skips_failed_methods() -> None:
    records = [_record(2, 0, 'rejection', 0.5), _record(2, 0, 'semianalytic', 0.5, error='ZeroIntegralError: x')]
    assert agreement_rows(records) == []


def test_report_unwritable(tmp_path) -> None:
    blocker = tmp_path / 'file'
    blocker.write_text('x', encoding='utf-8')
    with pytest.raises(OutputUnwritableError):
        report([_record(2, 0, 'rejection', 0.5)], blocker)


def test_viewmodel_progress(tmp_path) -> None:
    viewmodel = ComparisonViewModel(_fast_config(tmp_path, methods=('rejection',), count_per_dim=3))
    progress = []
    viewmodel.add_listener(lambda vm: progress.append((vm.is_running, vm.done)))
    records = viewmodel.run()
    assert viewmodel.total == 3
    assert len(records) == 3
    assert progress[0] == (True, 0)
    assert (True, 3) in progress
    assert progress[-1] == (False, 3)
    assert viewmodel.error_count == 0
    assert viewmodel.written['records'].exists()
    viewmodel.dispose()
