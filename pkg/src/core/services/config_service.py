"""Configuration service: built-in defaults, YAML file, environment overrides"""

import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from core.errors import ConfigError

logger = logging.getLogger(__name__)


DEFAULTS: Dict[str, Any] = {
    'logging': {'level': 'INFO', 'file': None},
    'rejection': {'m_target': 10_000, 'max_trials': 100_000_000},
    'gessner': {
        'rho': 0.5,
        'm_subset': 16,
        'm_hdr': 10_000,
        'thin_subset': 10,
        'thin_hdr': 2,
        'm_moments': 10_000,
        'thin_moments': 2,
        'burn_in': None,
        'max_levels': 200,
    },
    'semianalytic': {'abs_tol': 1e-4, 'high_accuracy_abs_tol': 1e-6},
    'mvn_cdf': {'max_evaluations': 2_000_000, 'shifts': 8, 'seed': 20220417},
    'harness': {'count_per_dim': 100, 'workers': 1, 'output_dir': 'stg-output', 'seed': 0},
}

# environment variable -> (dotted key, converter)
ENV_OVERRIDES = {
    'STG_LOG_LEVEL': ('logging.level', str),
    'STG_LOG_FILE': ('logging.file', str),
    'STG_OUTPUT_DIR': ('harness.output_dir', str),
    'STG_WORKERS': ('harness.workers', int),
    'STG_SEED': ('harness.seed', int),
}


def _merge(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def config_search_paths() -> list:
    """Candidate config files in lookup order"""
    explicit = os.environ.get('STG_CONFIG')
    if explicit:
        return [Path(explicit)]
    return [Path.cwd() / 'stg.yaml', Path.home() / '.stg' / 'config.yaml']


def load_yaml_file(path: Path) -> dict:
    """Read a YAML mapping; an empty file yields an empty dict."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"load_yaml_file: malformed YAML in {path}: {e}") from e
    except OSError as e:
        raise ConfigError(f"load_yaml_file: cannot read {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"load_yaml_file: {path} must contain a mapping, got {type(data).__name__}")
    return data


class ConfigService:
    """Singleton holding the resolved configuration for this process"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        load_dotenv()
        self._values = copy.deepcopy(DEFAULTS)
        self._source: Optional[Path] = None

        for path in config_search_paths():
            if path.is_file():
                _merge(self._values, load_yaml_file(path))
                self._source = path
                logger.debug(f"ConfigService: loaded {path}")
                break

        for env_name, (key, convert) in ENV_OVERRIDES.items():
            raw = os.environ.get(env_name)
            if raw is None or raw == '':
                continue
            try:
                self.set(key, convert(raw))
            except ValueError as e:
                raise ConfigError(f"ConfigService: bad value for {env_name}: {raw!r}") from e

        self._initialized = True

    @property
    def source(self) -> Optional[Path]:
        return self._source

    def get(self, key: str, default: Any = None) -> Any:
        """Get a value by dotted key, e.g. ``gessner.rho``"""
        node: Any = self._values
        for part in key.split('.'):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def section(self, name: str) -> Dict[str, Any]:
        return copy.deepcopy(self._values.get(name, {}))

    def set(self, key: str, value: Any):
        """Set a value in the in-memory view"""
        parts = key.split('.')
        node = self._values
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        logger.debug(f"ConfigService.set: key='{key}', value='{value}'")

    @classmethod
    def reset(cls):
        """Drop the singleton so the next construction reloads everything"""
        cls._instance = None
