"""
Bench layer - experiment configuration, profiles, sweep and CLI commands
"""
from .experiment import ExperimentConfig, build_experiment, parse_config_text, content_hash
from .profiles import PRESETS, ExperimentPreset, get_preset

__all__ = [
    "ExperimentConfig",
    "build_experiment",
    "parse_config_text",
    "content_hash",
    "PRESETS",
    "ExperimentPreset",
    "get_preset",
]
