"""Minority oversampling with a multilayer fuzzy c-means envelope network."""

__version__ = "0.1.0"

from .dataset import Dataset, class_stats, load, load_csv, load_keel, normalize_minmax, stratified_split  # noqa: E402
from .envelope import plan_layers  # noqa: E402
from .errors import ConfigError, DataError, EnvbalError, GenerationError, SplitError  # noqa: E402
from .sampler import BalanceConfig, balance  # noqa: E402

__all__ = [
    "Dataset",
    "load",
    "load_csv",
    "load_keel",
    "class_stats",
    "normalize_minmax",
    "stratified_split",
    "plan_layers",
    "BalanceConfig",
    "balance",
    "EnvbalError",
    "DataError",
    "ConfigError",
    "GenerationError",
    "SplitError",
]
