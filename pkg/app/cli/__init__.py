"""Experiment orchestration: configs, sweeps, summaries and the command line."""

from app.cli.experiment import ExperimentOutcome, RunPoint, run_experiment, run_point, sweep_points
from app.cli.models import ExperimentConfig, load_experiment_config
from app.cli.summary import SummaryRow, format_table, summarize

__all__ = [
    "ExperimentConfig",
    "ExperimentOutcome",
    "RunPoint",
    "SummaryRow",
    "format_table",
    "load_experiment_config",
    "run_experiment",
    "run_point",
    "summarize",
    "sweep_points",
]
