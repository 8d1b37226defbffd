"""Experiment harness: configs, runners, bundled figures, CLI."""

from .config import ConfigError, ExperimentConfig, load_config
from .reproduce import FIGURES, ReproduceOptions, reproduce_figure
from .results import ResultRow, ResultTable, RunLog, read_result_csv
from .runner import run_experiment, run_to_directory

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "FIGURES",
    "ReproduceOptions",
    "reproduce_figure",
    "ResultRow",
    "ResultTable",
    "RunLog",
    "read_result_csv",
    "run_experiment",
    "run_to_directory",
]
