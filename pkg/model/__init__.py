"""
Model layer - the inverter network ψ(y, θ)
"""
from .mlp import (
    MlpArchitecture,
    MlpParams,
    init,
    zeros_like,
    forward,
    predict,
    decode,
    as_input_matrix,
    head_ranges_for,
)

__all__ = [
    "MlpArchitecture",
    "MlpParams",
    "init",
    "zeros_like",
    "forward",
    "predict",
    "decode",
    "as_input_matrix",
    "head_ranges_for",
]
