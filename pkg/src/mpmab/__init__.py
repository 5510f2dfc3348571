"""Decentralized multi-player bandit simulation for cognitive ad-hoc networks."""
from .allocation import Assignment, hungarian, matching_value, pseudo_regret_step, top_n
from .env import ChannelModel, ConfigurationError, Environment, draw_slot, oracle_slot_value, resolve_slot
from .radio import RADIOS, Action, Observation, RadioCapability, observe, radio_from_name, validate_action
from .runner import DynamicsEvent, ExperimentConfig, run_experiment, run_replication

__version__ = "0.1.0"

__all__ = [
    "Assignment", "hungarian", "matching_value", "pseudo_regret_step", "top_n",
    "ChannelModel", "ConfigurationError", "Environment", "draw_slot", "oracle_slot_value", "resolve_slot",
    "RADIOS", "Action", "Observation", "RadioCapability", "observe", "radio_from_name", "validate_action",
    "DynamicsEvent", "ExperimentConfig", "run_experiment", "run_replication", "__version__",
]
