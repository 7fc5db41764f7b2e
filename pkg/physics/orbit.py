"""
Analytic Keplerian propagation into the Earth-fixed frame and ground-track
projection.

The longitude of the ascending node is fixed at 0 and the epoch at periapsis
passage (M = 0 at t = 0); only (e, i, ω) vary.
"""
import math
from typing import Tuple

import numpy as np

from infrastructure.errors import NumericError
from . import dual
from .dual import Dual
from .kepler import solve_kepler
from .schemas import OrbitalElements, PhysicsConstants

# |sin(lat)| beyond this makes d(asin)/dx blow up
POLE_GUARD = 1.0 - 1.0e-12


def propagate(
    x: OrbitalElements,
    times: np.ndarray,
    c: PhysicsConstants,
    with_tangent: bool = False,
) -> Tuple[Dual, Dual, Dual, Dual]:
    """
    Earth-fixed positions at ``times`` as dual numbers over (e, i, ω).

    Returns:
        (px, py, pz, r), each a Dual over the time samples
    """
    times = np.asarray(times, dtype=np.float64)
    n = times.shape[0]
    e = Dual.seed(x.e, 0, n, with_tangent)
    inc = Dual.seed(x.i, 1, n, with_tangent)
    argp = Dual.seed(x.omega, 2, n, with_tangent)

    mean_motion = math.sqrt(c.mu / c.a ** 3)
    M = mean_motion * times
    E_val, _, dE_de = solve_kepler(M, x.e)
    E_val = np.atleast_1d(E_val)
    # M does not depend on the elements, so dE = (∂E/∂e)·de
    E = Dual(E_val, None if e.tan is None else e.tan * np.atleast_1d(dE_de)[:, None])

    r = c.a * (1.0 - e * dual.cos(E))
    half = E * 0.5
    nu = 2.0 * dual.arctan2(dual.sqrt(1.0 + e) * dual.sin(half), dual.sqrt(1.0 - e) * dual.cos(half))

    # perifocal point (r cos ν, r sin ν, 0)
    xp = r * dual.cos(nu)
    yp = r * dual.sin(nu)

    # R_z(ω)
    cw, sw = dual.cos(argp), dual.sin(argp)
    x1 = xp * cw - yp * sw
    y1 = xp * sw + yp * cw

    # R_x(i); R_z(Ω = 0) is the identity
    ci, si = dual.cos(inc), dual.sin(inc)
    x_in = x1
    y_in = y1 * ci
    z_in = y1 * si

    # R_z(−ω_E·t): inertial -> Earth-fixed
    theta = c.omega_earth * times
    ct, st = np.cos(theta), np.sin(theta)
    px = x_in * ct + y_in * st
    py = y_in * ct - x_in * st
    return px, py, z_in, r


def position_ecef(x: OrbitalElements, t: float, c: PhysicsConstants) -> Tuple[float, float, float]:
    """Earth-fixed position (m) of the satellite at time ``t`` (s)"""
    px, py, pz, _ = propagate(x, np.array([float(t)]), c)
    return float(px.val[0]), float(py.val[0]), float(pz.val[0])


def ground_track_dual(px: Dual, py: Dual, pz: Dual) -> Tuple[Dual, Dual]:
    """Longitude / latitude of the sub-satellite points (vectorised, differentiable)"""
    norm = dual.sqrt(px * px + py * py + pz * pz)
    s = pz / norm
    s.val = np.clip(s.val, -1.0, 1.0)
    if s.tan is not None:
        bad = np.flatnonzero(np.abs(s.val) >= POLE_GUARD)
        if bad.size:
            raise NumericError(
                f"ground track crosses a pole at sample {int(bad[0])}; latitude derivative is not finite",
                detail={"sample": int(bad[0])},
            )
    return dual.arctan2(py, px), dual.arcsin(s)


def ground_track(px: float, py: float, pz: float) -> Tuple[float, float]:
    """
    Sub-satellite longitude in [−π, π) and latitude in [−π/2, π/2].

    Raises:
        NumericError: zero-norm position
    """
    norm = math.sqrt(px * px + py * py + pz * pz)
    if norm == 0.0 or not math.isfinite(norm):
        raise NumericError(f"ground_track: position norm is {norm}")
    lon = math.atan2(py, px)
    if lon >= math.pi:
        lon = -math.pi
    lat = math.asin(max(-1.0, min(1.0, pz / norm)))
    return lon, lat
