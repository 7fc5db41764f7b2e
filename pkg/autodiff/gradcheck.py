"""
Central finite differences for checking analytic gradients and Jacobians.
"""
from typing import Callable, Optional, Sequence

import numpy as np


def numerical_gradient(
    fun: Callable[[np.ndarray], float],
    x: np.ndarray,
    h: float = 1.0e-6,
    indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Central-difference gradient of a scalar function.

    ``x`` is perturbed in place one flat coordinate at a time and restored,
    so ``fun`` may close over the very array being checked (e.g. a weight
    matrix bound into a model).

    Args:
        fun: Scalar objective, evaluated with ``x`` perturbed
        x: Point of evaluation (any shape, float64)
        h: Step size
        indices: Flat coordinates to check (default: all)

    Returns:
        Array shaped like ``x`` (unchecked coordinates left at 0)
    """
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    coords = range(flat.size) if indices is None else indices

    for j in coords:
        original = flat[j]
        flat[j] = original + h
        f_plus = fun(x)
        flat[j] = original - h
        f_minus = fun(x)
        flat[j] = original
        gflat[j] = 0.5 * (f_plus - f_minus) / h

    return grad


def numerical_jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    h: float = 1.0e-6,
) -> np.ndarray:
    """Central-difference Jacobian (outputs flattened) of shape (m, x.size)"""
    x = np.array(x, dtype=np.float64, copy=True)
    flat = x.reshape(-1)
    columns = []
    for j in range(flat.size):
        original = flat[j]
        flat[j] = original + h
        f_plus = np.asarray(fun(x), dtype=np.float64).reshape(-1)
        flat[j] = original - h
        f_minus = np.asarray(fun(x), dtype=np.float64).reshape(-1)
        flat[j] = original
        columns.append(0.5 * (f_plus - f_minus) / h)
    return np.stack(columns, axis=1)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1.0e-12) -> float:
    """‖a − n‖₂ / max(‖a‖₂, ‖n‖₂, floor)"""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    scale = max(np.linalg.norm(a), np.linalg.norm(n), floor)
    return float(np.linalg.norm(a - n) / scale)
