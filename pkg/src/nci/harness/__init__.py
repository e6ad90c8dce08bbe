"""Declarative parameter sweeps over the numerical kernels."""

from .config import GridAxis, SweepConfig, validate_config, validate_text
from .experiments import EXPERIMENTS, run_task
from .runner import SweepReport, iter_sweep, read_records, rerun_record, run_sweep, splitmix64, task_seed

__all__ = ["GridAxis", "SweepConfig", "validate_config", "validate_text", "EXPERIMENTS",
           "run_task", "SweepReport", "iter_sweep", "read_records", "rerun_record",
           "run_sweep", "splitmix64", "task_seed"]
