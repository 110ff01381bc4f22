"""Experiment grids, trial execution, CSV output and the CLI."""

from reluam.harness.config import ConfigError, ExperimentSpec, GridPoint, InitSpec, parse_config
from reluam.harness.io import read_csv, write_csv
from reluam.harness.runner import ExperimentResult, TrialResult, run_experiment, run_trial

__all__ = [
    "ConfigError",
    "ExperimentResult",
    "ExperimentSpec",
    "GridPoint",
    "InitSpec",
    "TrialResult",
    "parse_config",
    "read_csv",
    "run_experiment",
    "run_trial",
    "write_csv",
]
