"""
Experiment profiles - preset defaults for the CLI

- toy: seconds; gradient checks and smoke runs
- desk: the desk-scale reproduction of the N_o × N_s comparison
- full: 64x64 images and the 5x784 network (hours of compute)
"""
from dataclasses import dataclass, field
from typing import Any, Dict

from infrastructure.errors import ConfigError


@dataclass
class ExperimentPreset:
    """Named set of ExperimentConfig defaults"""
    name: str
    description: str
    values: Dict[str, Any] = field(default_factory=dict)
    long_running: bool = False


PRESETS: Dict[str, ExperimentPreset] = {
    "toy": ExperimentPreset(
        name="Toy",
        description="16x16 images, tiny network; finishes in seconds",
        values={
            "width": 16,
            "height": 16,
            "n_samples": 64,
            "hidden_dims": [32, 16],
            "n_observed": 20,
            "n_simulated": 20,
            "n_observed_grid": [0, 20],
            "n_simulated_grid": [0, 20],
            "seeds": [0],
            "n_test": 20,
            "epochs": 5,
            "batch_size": 16,
            "learning_rate": 1e-3,
        },
    ),
    "desk": ExperimentPreset(
        name="Desk scale",
        description="32x32 images, 3x128 network, N_o/N_s in {0, 500, 2000}, 3 seeds",
        values={
            "width": 32,
            "height": 32,
            "n_samples": 128,
            "hidden_dims": [128, 128, 128],
            "n_observed": 2000,
            "n_simulated": 2000,
            "n_observed_grid": [0, 500, 2000],
            "n_simulated_grid": [0, 500, 2000],
            "seeds": [0, 1, 2],
            "n_test": 500,
            "epochs": 200,
            "batch_size": 64,
            "learning_rate": 1e-3,
        },
    ),
    "full": ExperimentPreset(
        name="Full scale",
        description="64x64 images, 5x784 network, grids up to 40000 (long-running)",
        values={
            "width": 64,
            "height": 64,
            "n_samples": 256,
            "hidden_dims": [784, 784, 784, 784, 784],
            "n_observed": 40000,
            "n_simulated": 40000,
            "n_observed_grid": [0, 1000, 10000, 20000, 40000],
            "n_simulated_grid": [0, 1000, 10000, 20000, 40000],
            "seeds": [0, 1, 2],
            "n_test": 2000,
            "epochs": 200,
            "batch_size": 64,
            "learning_rate": 1e-3,
        },
        long_running=True,
    ),
}

DEFAULT_PROFILE = "desk"


def get_preset(name: str) -> ExperimentPreset:
    if name not in PRESETS:
        raise ConfigError(f"unknown profile {name!r} (available: {', '.join(sorted(PRESETS))})")
    return PRESETS[name]


def list_presets() -> Dict[str, str]:
    return {key: p.description for key, p in PRESETS.items()}
