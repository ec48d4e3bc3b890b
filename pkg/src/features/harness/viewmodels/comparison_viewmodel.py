"""Comparison run coordinator with progress notification"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

from core.viewmodels.base_viewmodel import BaseViewModel
from features.harness.services.comparison_service import ComparisonRecord, ExperimentConfig, run_comparison
from features.harness.services.report_service import report

logger = logging.getLogger(__name__)


class ComparisonViewModel(BaseViewModel):
    """Runs an experiment, tracks progress, and writes its reports"""

    def __init__(self, config: ExperimentConfig):
        super().__init__()
        self._config = config
        self._records: List[ComparisonRecord] = []
        self._done = 0
        self._total = len(config.dims) * config.count_per_dim
        self._is_running = False
        self._last_batch: List[ComparisonRecord] = []
        self._written: Dict[str, Path] = {}

    # Getters
    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @property
    def records(self) -> List[ComparisonRecord]:
        return self._records

    @property
    def done(self) -> int:
        return self._done

    @property
    def total(self) -> int:
        return self._total

    @property
    def is_running(self) -> bool:
        return self._is_running

    @property
    def last_batch(self) -> List[ComparisonRecord]:
        return self._last_batch

    @property
    def error_count(self) -> int:
        return sum(1 for r in self._records if not r.ok)

    @property
    def written(self) -> Dict[str, Path]:
        return self._written

    def _on_distribution_done(self, batch: List[ComparisonRecord]):
        self._done += 1
        self._last_batch = batch
        self.notify_listeners()

    def run(self, output_dir: Optional[Path] = None) -> List[ComparisonRecord]:
        """Run the experiment and write reports to output_dir (config.output_dir by default)"""
        self._is_running = True
        self._done = 0
        self.notify_listeners()
        try:
            self._records = run_comparison(self._config, self._on_distribution_done)
        finally:
            self._is_running = False
        self._written = report(self._records, output_dir or self._config.output_dir)
        logger.info(f"ComparisonViewModel.run: {len(self._records)} records, {self.error_count} with errors")
        self.notify_listeners()
        return self._records
