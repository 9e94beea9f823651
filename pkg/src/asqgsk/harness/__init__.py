"""Experiment sweeps, result emission and the command-line interface."""

from .config import ExperimentConfig, build_config, load_config
from .emit import COLUMNS, Row, emit, parse, render
from .experiments import (
    run_calibration_experiment,
    run_experiment,
    run_keyrate_experiment,
    run_leakage_experiment,
    run_reconciliation_experiment,
    run_selection_experiment,
)

__all__ = [
    "COLUMNS", "ExperimentConfig", "Row", "build_config", "emit", "load_config", "parse", "render",
    "run_calibration_experiment", "run_experiment", "run_keyrate_experiment", "run_leakage_experiment",
    "run_reconciliation_experiment", "run_selection_experiment",
]
