"""
Deterministic dataset synthesis from the forward operator.

Elements are drawn from uniform priors on [0, e_max) × [0, 2π) × [0, 2π);
item k of a pool depends only on (seed, pool namespace, k).
"""
from typing import List

import numpy as np
from agno.utils.log import logger

from infrastructure.errors import ContractError
from physics.render import render
from physics.schemas import OrbitalElements, PhysicsConstants, SensorImage, TWO_PI
from training.schemas import LabeledSample, ObservedSample
from .rng import LABELED, OBSERVED, TEST, item_normals, uniform_rows

NOISE_FRACTION = 0.01
NOISE_REFERENCE_RENDERS = 32


def sample_elements(seed: int, n: int, e_max: float, stream: str = LABELED) -> List[OrbitalElements]:
    """n elements from the uniform prior; prefix-consistent in n"""
    if n < 0:
        raise ContractError(f"sample count must be >= 0, got {n}")
    u = uniform_rows(seed, stream, n, 3)
    scale = np.array([e_max, TWO_PI, TWO_PI])
    return [OrbitalElements.from_vector(row * scale) for row in u]


def make_labeled(seed: int, n: int, physics: PhysicsConstants) -> List[LabeledSample]:
    """Noise-free simulated pairs (x, f̂(x))"""
    elements = sample_elements(seed, n, physics.e_max, LABELED)
    logger.debug(f"[Gen] rendering {n} labeled samples (seed={seed})")
    return [LabeledSample(x=x, y=render(x, physics)) for x in elements]


def make_observed(
    seed: int,
    n: int,
    physics: PhysicsConstants,
    noise_sigma: float,
    stream: str = OBSERVED,
) -> List[ObservedSample]:
    """
    Observations y = f̂(x) + ε, ε ~ N(0, σ²) per pixel, clamped at 0.

    Args:
        stream: OBSERVED for the training pool, TEST for the test pool
    """
    if noise_sigma < 0.0:
        raise ContractError(f"noise_sigma must be >= 0, got {noise_sigma}")
    elements = sample_elements(seed, n, physics.e_max, stream)
    out = []
    for k, x in enumerate(elements):
        clean = render(x, physics).pixels
        if noise_sigma > 0.0:
            eps = item_normals(seed, f"{stream}-noise", k, clean.size).reshape(clean.shape)
            pixels = np.maximum(clean + noise_sigma * eps, 0.0)
        else:
            pixels = clean
        out.append(ObservedSample(y=SensorImage(physics.width, physics.height, pixels), x_hidden=x))
    logger.debug(f"[Gen] rendered {n} {stream} samples (seed={seed}, σ={noise_sigma:.3e})")
    return out


def make_test(seed: int, n: int, physics: PhysicsConstants, noise_sigma: float) -> List[ObservedSample]:
    """Test observations from their own seed namespace"""
    return make_observed(seed, n, physics, noise_sigma, stream=TEST)


def default_noise_sigma(physics: PhysicsConstants, seed: int = 0) -> float:
    """1% of the mean nonzero pixel intensity over a fixed set of clean reference renders"""
    references = sample_elements(seed, NOISE_REFERENCE_RENDERS, physics.e_max, "noise-reference")
    values = np.concatenate([render(x, physics).pixels.reshape(-1) for x in references])
    nonzero = values[values > 0.0]
    if nonzero.size == 0:
        return 0.0
    return NOISE_FRACTION * float(nonzero.mean())
