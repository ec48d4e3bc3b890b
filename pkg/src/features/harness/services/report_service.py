"""Flat-file reports of a comparison run.

records.csv    one row per record, frozen header, seed-determined fields only
timings.csv    wall-clock seconds per record
summary.json   per-dimension, per-method timing median and 16th/84th percentiles
               (linear interpolation) plus error counts and agreement rates
agreement.csv  per-distribution pairwise deviations of every estimated quantity
"""

import csv
import json
import logging
import math
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from core.errors import OutputUnwritableError
from features.harness.services.comparison_service import METHODS, ComparisonRecord

logger = logging.getLogger(__name__)

RECORD_COLUMNS = (
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
TIMING_COLUMNS = ('dim', 'distribution_index', 'method', 'wall_seconds')
AGREEMENT_COLUMNS = (
    'dim',
    'distribution_index',
    'method_a',
    'method_b',
    'quantity',
    'value_a',
    'value_b',
    'deviation',
    'combined_se',
    'z_score',
)
PERCENTILES = (16.0, 50.0, 84.0)
AGREEMENT_THRESHOLD = 4.0


def format_float(value: Optional[float]) -> str:
    """Shortest round-trip decimal; empty for missing values"""
    if value is None:
        return ''
    return repr(float(value))


def _join(values: Iterable[float]) -> str:
    return ';'.join(format_float(v) for v in values)


def record_row(record: ComparisonRecord) -> List[str]:
    diag = record.diagnostics
    return [
        str(record.dim),
        str(record.distribution_index),
        record.method,
        str(record.seed),
        format_float(record.z),
        format_float(record.z_log),
        format_float(diag.get('z_se')),
        _join(record.mean_t),
        _join(diag.get('mean_se', ())),
        _join(record.cov_t),
        _join(diag.get('cov_se', ())),
        str(diag.get('levels', '')),
        str(diag.get('region_phi_calls', '')),
        str(diag.get('rect_prob_calls', '')),
        record.error or '',
    ]


def _quantities(record: ComparisonRecord):
    """(name, value, standard error) for Z, every mean entry and every covariance entry"""
    diag = record.diagnostics
    n = record.dim
    iu, ju = np.triu_indices(n)
    mean_se = diag.get('mean_se') or [0.0] * n
    cov_se = diag.get('cov_se') or [0.0] * len(iu)
    yield 'z', record.z, diag.get('z_se') or 0.0
    for i, value in enumerate(record.mean_t):
        yield f'mean_t[{i}]', value, mean_se[i]
    for t, value in enumerate(record.cov_t):
        yield f'cov_t[{iu[t]},{ju[t]}]', value, cov_se[t]


def agreement_rows(records: Sequence[ComparisonRecord]) -> List[Dict[str, Any]]:
    """Pairwise method deviations for every distribution where both methods succeeded"""
    by_cell: Dict[tuple, Dict[str, ComparisonRecord]] = {}
    for record in records:
        if record.ok:
            by_cell.setdefault((record.dim, record.distribution_index), {})[record.method] = record

    rows = []
    for (dim, index), methods in sorted(by_cell.items()):
        present = [m for m in METHODS if m in methods]
        for name_a, name_b in combinations(present, 2):
            for (quantity, va, sa), (_, vb, sb) in zip(_quantities(methods[name_a]), _quantities(methods[name_b])):
                deviation = va - vb
                combined = math.sqrt(sa * sa + sb * sb)
                rows.append({
                    'dim': dim,
                    'distribution_index': index,
                    'method_a': name_a,
                    'method_b': name_b,
                    'quantity': quantity,
                    'value_a': va,
                    'value_b': vb,
                    'deviation': deviation,
                    'combined_se': combined,
                    'z_score': deviation / combined if combined > 0 else None,
                })
    return rows


def agreement_rates(rows: Sequence[Dict[str, Any]], threshold: float = AGREEMENT_THRESHOLD) -> Dict[str, Dict[str, Any]]:
    """Share of comparisons with |z_score| <= threshold, per method pair"""
    rates: Dict[str, Dict[str, Any]] = {}
    for row in rows:
        if row['z_score'] is None:
            continue
        key = f"{row['method_a']}-{row['method_b']}"
        entry = rates.setdefault(key, {'comparisons': 0, 'within': 0})
        entry['comparisons'] += 1
        entry['within'] += int(abs(row['z_score']) <= threshold)
    for entry in rates.values():
        entry['fraction'] = entry['within'] / entry['comparisons']
    return rates


def timing_summary(records: Sequence[ComparisonRecord]) -> Dict[str, Dict[str, Dict[str, Any]]]:
    """Median and 68 % central interval of wall_seconds per dimension and method"""
    summary: Dict[str, Dict[str, Dict[str, Any]]] = {}
    groups: Dict[tuple, List[ComparisonRecord]] = {}
    for record in records:
        groups.setdefault((record.dim, record.method), []).append(record)
    for (dim, method), group in sorted(groups.items(), key=lambda kv: (kv[0][0], METHODS.index(kv[0][1]))):
        times = [r.wall_seconds for r in group if r.ok]
        entry: Dict[str, Any] = {'records': len(group), 'errors': sum(1 for r in group if not r.ok)}
        if times:
            p16, median, p84 = np.percentile(times, PERCENTILES, method='linear')
            entry.update({'median': float(median), 'p16': float(p16), 'p84': float(p84)})
        summary.setdefault(str(dim), {})[method] = entry
    return summary


def build_summary(records: Sequence[ComparisonRecord]) -> Dict[str, Any]:
    return {
        'interpolation': 'linear',
        'percentiles': list(PERCENTILES),
        'timings': timing_summary(records),
        'agreement': agreement_rates(agreement_rows(records)),
    }


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def report(records: Sequence[ComparisonRecord], output_dir, formats: Sequence[str] = ('csv', 'json')) -> Dict[str, Path]:
    """
    Write the report files for ``records`` into ``output_dir``.

    Args:
        records: Output of run_comparison
        output_dir: Target directory, created if missing
        formats: 'csv' writes records/timings/agreement tables, 'json' writes summary.json

    Returns:
        Mapping of report name to written path

    Raises:
        OutputUnwritableError: the directory or a file could not be written
    """
    out = Path(output_dir)
    written: Dict[str, Path] = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        if 'csv' in formats:
            written['records'] = out / 'records.csv'
            _write_csv(written['records'], RECORD_COLUMNS, (record_row(r) for r in records))

            written['timings'] = out / 'timings.csv'
            _write_csv(
                written['timings'],
                TIMING_COLUMNS,
                ([r.dim, r.distribution_index, r.method, format_float(r.wall_seconds)] for r in records),
            )

            written['agreement'] = out / 'agreement.csv'
            _write_csv(
                written['agreement'],
                AGREEMENT_COLUMNS,
                (
                    [
                        row['dim'],
                        row['distribution_index'],
                        row['method_a'],
                        row['method_b'],
                        row['quantity'],
                        format_float(row['value_a']),
                        format_float(row['value_b']),
                        format_float(row['deviation']),
                        format_float(row['combined_se']),
                        format_float(row['z_score']),
                    ]
                    for row in agreement_rows(records)
                ),
            )
        if 'json' in formats:
            written['summary'] = out / 'summary.json'
            with open(written['summary'], 'w', encoding='utf-8', newline='\n') as f:
                json.dump(build_summary(records), f, indent=2, sort_keys=True)
                f.write('\n')
    except OSError as e:
        raise OutputUnwritableError(f"report: cannot write to {out}: {e}") from e

    logger.info(f"report: wrote {', '.join(sorted(written))} to {out}")
    return written
