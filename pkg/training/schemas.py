"""
Training data and configuration types.
"""
from dataclasses import dataclass
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from infrastructure.errors import ConfigError
from model.mlp import MlpArchitecture
from physics.schemas import OrbitalElements, PhysicsConstants, SensorImage

DEFAULT_HIDDEN = [128, 128, 128]


# =============================================================================
# Samples
# =============================================================================

@dataclass(frozen=True)
class LabeledSample:
    """Simulated pair (x, f̂(x)); no noise"""
    x: OrbitalElements
    y: SensorImage


@dataclass(frozen=True)
class ObservedSample:
    """
    Observation y = f(x) + ε.

    ``x_hidden`` is kept for test-time metrics; the training loss never reads it.
    """
    y: SensorImage
    x_hidden: OrbitalElements


# =============================================================================
# Train config
# =============================================================================

class TrainConfig(BaseModel):
    """One training run: loss weighting, pool sizes, optimizer and model"""
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(default=0.5, alias="lambda", gt=0.0, lt=1.0,
                       description="Weight of the reconstruction term")
    n_observed: int = Field(default=0, ge=0, description="N_o, observation-only samples")
    n_simulated: int = Field(default=0, ge=0, description="N_s, simulated labeled pairs")
    epochs: int = Field(default=200, ge=0)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    seed: int = Field(default=0, ge=0)
    noise_sigma: Optional[float] = Field(default=None, ge=0.0,
                                         description="Pixel noise std; None = 1% of mean nonzero pixel")
    physics: PhysicsConstants = Field(default_factory=PhysicsConstants)
    arch: Optional[MlpArchitecture] = None

    # "lambda": observed samples weigh λ·recon; "unit": weigh recon alone
    observed_weight: Literal["lambda", "unit"] = "lambda"
    # "supervised" drops the reconstruction term and the observed pool
    objective: Literal["hybrid", "supervised"] = "hybrid"
    log_every: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if self.n_observed + self.n_simulated < 1:
            raise ValueError("N_o + N_s must be at least 1")
        if self.arch is None:
            self.arch = MlpArchitecture.for_image(self.physics.width, self.physics.height, DEFAULT_HIDDEN)
        if self.arch.input_dim != self.physics.pixel_count:
            raise ValueError(
                f"arch.input_dim = {self.arch.input_dim} but images have {self.physics.pixel_count} pixels"
            )
        return self

    @property
    def method(self) -> str:
        """Run label used in reports"""
        if self.objective == "supervised":
            return "supervised"
        return "pinn" if self.n_simulated == 0 else "simpinn"

    @classmethod
    def build(cls, **values) -> "TrainConfig":
        """Construct, converting validation failures into ConfigError"""
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid training config: {_first_error(e)}") from e


def _first_error(e: ValidationError) -> str:
    errors = e.errors()
    if not errors:
        return str(e)
    err = errors[0]
    loc = ".".join(str(p) for p in err.get("loc", ())) or "config"
    return f"{loc}: {err.get('msg', 'invalid value')}"


def pool_sizes(labeled: List[LabeledSample], observed: List[ObservedSample]) -> str:
    return f"N_s={len(labeled)}, N_o={len(observed)}"
