"""Configuration, experiment grids, records and the command line."""

from .config import Settings, load_config
from .experiments import ExperimentGrid, emit_shift_data, run_experiment, shift_runs
from .records import SCHEMA_VERSION, Appender, SchemaError, read_records

__all__ = [
    "SCHEMA_VERSION",
    "Appender",
    "ExperimentGrid",
    "SchemaError",
    "Settings",
    "emit_shift_data",
    "load_config",
    "read_records",
    "run_experiment",
    "shift_runs",
]
