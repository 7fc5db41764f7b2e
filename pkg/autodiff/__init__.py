"""
Autodiff layer - minimal reverse-mode differentiation for the inverter network

Provides:
- Tape / TapeValue: define-by-run graph of dense float64 operations
- Ops: affine, relu, sigmoid, mse, column_weighted_mse, scale, add, total,
  inject_external_vjp
- backward(): reverse sweep accumulating gradients
- gradcheck: central finite-difference oracle
"""
from .tape import (
    Tape,
    TapeValue,
    affine,
    relu,
    sigmoid,
    mse,
    column_weighted_mse,
    total,
    scale,
    add,
    inject_external_vjp,
    backward,
)
from .gradcheck import numerical_gradient, numerical_jacobian, relative_error

__all__ = [
    "Tape",
    "TapeValue",
    "affine",
    "relu",
    "sigmoid",
    "mse",
    "column_weighted_mse",
    "total",
    "scale",
    "add",
    "inject_external_vjp",
    "backward",
    "numerical_gradient",
    "numerical_jacobian",
    "relative_error",
]
