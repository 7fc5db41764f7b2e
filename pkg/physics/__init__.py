"""
Physics layer - the differentiable forward operator

Provides:
- OrbitalElements, PhysicsConstants, SensorImage, IntensityLaw
- solve_kepler: Newton solver with implicit partials
- position_ecef / ground_track: Earth-fixed propagation and projection
- rasterize: Gaussian-splat image formation
- render / render_jacobian / render_jacobians: the operator and its 3-column Jacobian
"""
from .schemas import (
    IntensityLaw,
    OrbitalElements,
    PhysicsConstants,
    SensorImage,
    TWO_PI,
)
from .kepler import solve_kepler
from .orbit import position_ecef, ground_track
from .raster import rasterize
from .render import render, render_jacobian, render_jacobians, sample_times

__all__ = [
    "IntensityLaw",
    "OrbitalElements",
    "PhysicsConstants",
    "SensorImage",
    "TWO_PI",
    "solve_kepler",
    "position_ecef",
    "ground_track",
    "rasterize",
    "render",
    "render_jacobian",
    "render_jacobians",
    "sample_times",
]
