"""Simulated experiments, shot sampling, file formats and the CLI."""
from .device import ConfigError, DeviceSpec, device_model, task_seed
from .experiments import (
    ExperimentConfig, HaarResult, PauliResult, d_grid, default_time_grid, prepare_sequence,
    run_haar_interval_experiment, run_pauli_experiment, survival, virtualize_y,
)
from .io import (
    FormatError, config_from_dict, config_to_dict, dumps_config, dumps_curves, dumps_haar,
    dumps_schedule, loads_config, loads_curves, loads_schedule, schedule_from_dict,
    schedule_to_dict,
)
from .states import PAULI_LABELS, haar_state, pauli_states, sample_shots

__all__ = [
    "ConfigError", "DeviceSpec", "device_model", "task_seed", "ExperimentConfig", "HaarResult",
    "PauliResult", "d_grid", "default_time_grid", "prepare_sequence",
    "run_haar_interval_experiment", "run_pauli_experiment", "survival", "virtualize_y",
    "FormatError", "config_from_dict", "config_to_dict", "dumps_config", "dumps_curves",
    "dumps_haar", "dumps_schedule", "loads_config", "loads_curves", "loads_schedule",
    "schedule_from_dict", "schedule_to_dict", "PAULI_LABELS", "haar_state", "pauli_states",
    "sample_shots",
]
