"""
Kepler's equation M = E − e·sin E, solved by Newton iteration, with the
partials of E obtained by implicit differentiation.
"""
from typing import Tuple, Union

import numpy as np
from agno.utils.log import logger

from infrastructure.errors import DomainError, NumericError
from .schemas import E_LIMIT, TWO_PI

MAX_ITERATIONS = 50
RESIDUAL_TOL = 1.0e-14
ACCEPT_TOL = 1.0e-12

ArrayLike = Union[float, np.ndarray]


def solve_kepler(M: ArrayLike, e: float) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """
    Solve for the eccentric anomaly.

    Args:
        M: Mean anomaly (scalar or array), any real value
        e: Eccentricity in [0, 0.95]

    Returns:
        (E, dE/dM, dE/de), shaped like ``M``. E lies on the same 2π branch as M.

    Raises:
        DomainError: e outside [0, 0.95]
        NumericError: no convergence within 50 iterations
    """
    if not 0.0 <= e <= E_LIMIT:
        raise DomainError(f"solve_kepler: eccentricity {e} outside [0, {E_LIMIT}]")

    scalar = np.ndim(M) == 0
    M_arr = np.atleast_1d(np.asarray(M, dtype=np.float64))
    M_red = np.mod(M_arr, TWO_PI)

    E = np.array(M_red, copy=True) if e < 0.8 else np.full_like(M_red, np.pi)
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        residual = E - e * np.sin(E) - M_red
        if np.max(np.abs(residual)) <= RESIDUAL_TOL:
            break
        E = E - residual / (1.0 - e * np.cos(E))

    residual = E - e * np.sin(E) - M_red
    worst = float(np.max(np.abs(residual))) if residual.size else 0.0
    if worst > ACCEPT_TOL:
        raise NumericError(
            f"Kepler solver did not converge after {MAX_ITERATIONS} iterations "
            f"(e={e}, residual={worst:.3e})"
        )
    logger.debug(f"[Kepler] converged in {iterations} iterations (e={e:.4f}, n={M_arr.size})")

    denom = 1.0 - e * np.cos(E)
    dE_dM = 1.0 / denom
    dE_de = np.sin(E) / denom
    E = E + (M_arr - M_red)

    if scalar:
        return float(E[0]), float(dE_dM[0]), float(dE_de[0])
    return E, dE_dM, dE_de
