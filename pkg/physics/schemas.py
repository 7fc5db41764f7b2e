"""
Domain types of the forward operator: orbital elements, physical constants
and sensor images.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from infrastructure.errors import DomainError

TWO_PI = 2.0 * math.pi

# Standard Earth constants
MU_EARTH = 3.986004418e14           # m^3 / s^2
OMEGA_EARTH = 7.2921150e-5          # rad / s
SIDEREAL_DAY = 86164.0              # s
# Apogee radius of the reference orbit (e = 0.4, i = 45 deg); a = apogee / (1 + e)
REFERENCE_APOGEE = 42164.0e3        # m
DEFAULT_SEMI_MAJOR_AXIS = round(REFERENCE_APOGEE / 1.4, -3)
# Largest eccentricity the Kepler solver accepts
E_LIMIT = 0.95


# =============================================================================
# Enums
# =============================================================================

class IntensityLaw(str, Enum):
    """Per-sample weight of a ground-track point"""
    UNIFORM = "uniform"                  # every sample weighs 1
    INVERSE_SQUARE = "inverse_square"    # (a(1-e) / r)^2, 1 at periapsis


# =============================================================================
# Physical constants
# =============================================================================

class PhysicsConstants(BaseModel):
    """Fixed parameters of the forward operator (everything except e, i, ω)"""
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    a: float = Field(default=DEFAULT_SEMI_MAJOR_AXIS, gt=0, description="Semi-major axis, m")
    mu: float = Field(default=MU_EARTH, gt=0, description="Gravitational parameter, m^3/s^2")
    omega_earth: float = Field(default=OMEGA_EARTH, description="Earth rotation rate, rad/s")
    t_span: float = Field(default=SIDEREAL_DAY, gt=0, description="Observation duration, s")
    n_samples: int = Field(default=256, ge=2, description="Time samples along the track")
    sigma_splat: float = Field(default=1.5, gt=0, description="Gaussian splat width, px")
    width: int = Field(default=64, ge=1)
    height: int = Field(default=64, ge=1)
    intensity_law: IntensityLaw = IntensityLaw.UNIFORM
    e_max: float = Field(default=E_LIMIT, gt=0, le=E_LIMIT, description="Largest eccentricity accepted")

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def orbital_period(self) -> float:
        return TWO_PI * math.sqrt(self.a ** 3 / self.mu)


# =============================================================================
# Orbital elements
# =============================================================================

@dataclass(frozen=True)
class OrbitalElements:
    """
    The parameter vector x = (e, i, ω) recovered by the inverter.

    Angles are reduced into [0, 2π) on construction.
    """
    e: float
    i: float
    omega: float

    def __post_init__(self):
        values = (self.e, self.i, self.omega)
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"orbital elements must be finite, got {values}")
        if not 0.0 <= self.e < 1.0:
            raise DomainError(f"eccentricity must lie in [0, 1), got {self.e}")
        object.__setattr__(self, "e", float(self.e))
        object.__setattr__(self, "i", _reduce_angle(self.i))
        object.__setattr__(self, "omega", _reduce_angle(self.omega))

    def as_array(self) -> np.ndarray:
        return np.array([self.e, self.i, self.omega], dtype=np.float64)

    @classmethod
    def from_vector(cls, values: Sequence[float]) -> "OrbitalElements":
        e, i, omega = (float(v) for v in values)
        return cls(e=e, i=i, omega=omega)

    def check_domain(self, e_max: float) -> None:
        if self.e > e_max:
            raise DomainError(f"eccentricity {self.e} exceeds e_max = {e_max}")

    def key(self) -> Tuple[float, float, float]:
        return (self.e, self.i, self.omega)


def _reduce_angle(angle: float) -> float:
    reduced = float(np.mod(float(angle), TWO_PI))
    # np.mod can round up to exactly 2π for tiny negative inputs
    return 0.0 if reduced >= TWO_PI else reduced


# =============================================================================
# Sensor image
# =============================================================================

@dataclass(frozen=True)
class SensorImage:
    """Non-negative intensity grid, stored (height, width) row-major"""
    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.size != self.width * self.height:
            raise DomainError(
                f"image of {self.width}x{self.height} needs {self.width * self.height} pixels, got {pixels.size}"
            )
        pixels = pixels.reshape(self.height, self.width)
        if not np.all(np.isfinite(pixels)):
            raise DomainError("image pixels must be finite")
        if np.any(pixels < 0.0):
            raise DomainError("image pixels must be non-negative")
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def zeros(cls, width: int, height: int) -> "SensorImage":
        return cls(width=width, height=height, pixels=np.zeros((height, width)))

    def column(self) -> np.ndarray:
        """Row-major flattening as a (width·height, 1) column"""
        return self.pixels.reshape(-1, 1)

    def total(self) -> float:
        return float(self.pixels.sum())
