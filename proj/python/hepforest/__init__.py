"""Tree ensembles and boosting for signal/background classification."""

import json

from ._hepforest import (
    ConfigError,
    DataError,
    Dataset,
    Model,
    evaluate,
    impute_median,
    kinematics,
    load_csv,
    metrics,
    rebalance_weights,
)
from . import _hepforest

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "Model",
    "evaluate",
    "impute_median",
    "kinematics",
    "load_csv",
    "load_split",
    "metrics",
    "rebalance_weights",
    "train",
]


def _config_text(config):
    return json.dumps(config or {})


def train(dataset, config=None, seed=None, workers=None):
    """Fit the model described by a config dict; returns (model, stage log)."""
    config = dict(config or {})
    if seed is not None:
        config["seed"] = seed
    if workers is not None:
        config["workers"] = workers
    return _hepforest._train(_config_text(config), dataset)


def load_split(config, split):
    """Loads 'train', 'validation', 'test' or 'custom' as the config describes."""
    return _hepforest._load_split(_config_text(config), split)
