"""
ExperimentConfig - every knob of a run or sweep, and its ``key = value`` file.

File format: one ``key = value`` per line, ``#`` starts a comment, lists are
comma-separated, ``noise_sigma = auto`` selects the default noise level.
Unknown keys are errors. Sources are merged in this order, later winning:

    profile defaults < --config file < SIMPINN_OUT (output_dir) < --key value flags
"""
import hashlib
import json
import os
from typing import Any, Dict, List, Literal, Mapping, Optional

from agno.utils.log import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import config as runtime_config
from infrastructure.errors import ConfigError
from infrastructure.retry_utils import atomic_write_text
from model.mlp import MlpArchitecture
from physics.schemas import E_LIMIT, IntensityLaw, PhysicsConstants
from training.schemas import DEFAULT_HIDDEN, TrainConfig
from .profiles import DEFAULT_PROFILE, get_preset

CONFIG_DUMP_NAME = "config.txt"


class ExperimentConfig(BaseModel):
    """Flat union of physics, training and sweep settings"""
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    # Physics
    a: float = PhysicsConstants.model_fields["a"].default
    mu: float = PhysicsConstants.model_fields["mu"].default
    omega_earth: float = PhysicsConstants.model_fields["omega_earth"].default
    t_span: float = PhysicsConstants.model_fields["t_span"].default
    n_samples: int = PhysicsConstants.model_fields["n_samples"].default
    sigma_splat: float = PhysicsConstants.model_fields["sigma_splat"].default
    width: int = 32
    height: int = 32
    intensity_law: IntensityLaw = IntensityLaw.UNIFORM
    e_max: float = Field(default=E_LIMIT, gt=0, le=E_LIMIT)

    # Model / training
    hidden_dims: List[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN))
    lam: float = Field(default=0.5, alias="lambda")
    n_observed: int = 0
    n_simulated: int = 500
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    noise_sigma: Optional[float] = None
    observed_weight: Literal["lambda", "unit"] = "lambda"
    objective: Literal["hybrid", "supervised"] = "hybrid"
    log_every: int = 10

    # Evaluation / sweep
    n_test: int = Field(default=500, ge=1)
    n_observed_grid: List[int] = Field(default_factory=lambda: [0, 500, 2000])
    n_simulated_grid: List[int] = Field(default_factory=lambda: [0, 500, 2000])
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])
    lambda_grid: List[float] = Field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    gallery_k: int = Field(default=8, ge=0)
    output_dir: str = "./runs"

    @field_validator("noise_sigma", mode="before")
    @classmethod
    def _auto_noise(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in ("auto", "none", ""):
            return None
        return v

    @field_validator("hidden_dims", "n_observed_grid", "n_simulated_grid", "seeds", "lambda_grid", mode="before")
    @classmethod
    def _split_list(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @model_validator(mode="after")
    def _grids(self) -> "ExperimentConfig":
        if any(n < 0 for n in self.n_observed_grid + self.n_simulated_grid):
            raise ValueError("grid counts must be >= 0")
        return self

    # -------------------------------------------------------------------------
    # Derived configs
    # -------------------------------------------------------------------------

    def physics(self) -> PhysicsConstants:
        try:
            return PhysicsConstants(
                a=self.a, mu=self.mu, omega_earth=self.omega_earth, t_span=self.t_span,
                n_samples=self.n_samples, sigma_splat=self.sigma_splat, width=self.width,
                height=self.height, intensity_law=self.intensity_law, e_max=self.e_max,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid physics settings: {_first_error(e)}") from e

    def arch(self) -> MlpArchitecture:
        return MlpArchitecture.for_image(self.width, self.height, self.hidden_dims)

    def train_config(
        self,
        n_observed: Optional[int] = None,
        n_simulated: Optional[int] = None,
        seed: Optional[int] = None,
        noise_sigma: Optional[float] = None,
    ) -> TrainConfig:
        return TrainConfig.build(
            lam=self.lam,
            n_observed=self.n_observed if n_observed is None else n_observed,
            n_simulated=self.n_simulated if n_simulated is None else n_simulated,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            seed=self.seed if seed is None else seed,
            noise_sigma=self.noise_sigma if noise_sigma is None else noise_sigma,
            physics=self.physics(),
            arch=self.arch(),
            observed_weight=self.observed_weight,
            objective=self.objective,
            log_every=self.log_every,
        )

    def require_grids(self) -> None:
        if not self.n_observed_grid or not self.n_simulated_grid or not self.seeds:
            raise ConfigError("sweep needs non-empty n_observed_grid, n_simulated_grid and seeds")

    # -------------------------------------------------------------------------
    # Text form
    # -------------------------------------------------------------------------

    def to_text(self) -> str:
        """Every field as ``key = value``; parsing it back gives an equal config"""
        lines = ["# effective experiment configuration"]
        for name, info in type(self).model_fields.items():
            key = info.alias or name
            lines.append(f"{key} = {_format_value(getattr(self, name))}")
        return "\n".join(lines) + "\n"

    def dump(self, directory: str) -> str:
        """Write the effective config next to the outputs"""
        return atomic_write_text(os.path.join(directory, CONFIG_DUMP_NAME), self.to_text())


def _format_value(value: Any) -> str:
    if value is None:
        return "auto"
    if isinstance(value, IntensityLaw):
        return value.value
    if isinstance(value, list):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0] if e.errors() else {}
    loc = ".".join(str(p) for p in err.get("loc", ())) or "config"
    return f"{loc}: {err.get('msg', str(e))}"


# =============================================================================
# Parsing and merging
# =============================================================================

def known_keys() -> Dict[str, str]:
    """Accepted spellings -> field name (``lambda`` and ``lam`` both map to lam)"""
    keys = {}
    for name, info in ExperimentConfig.model_fields.items():
        keys[name] = name
        if info.alias:
            keys[info.alias] = name
    return keys


def normalize_key(raw: str) -> str:
    key = raw.strip().replace("-", "_")
    field_name = known_keys().get(key)
    if field_name is None:
        raise ConfigError(f"unknown config key {raw.strip()!r}")
    return field_name


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    Parse ``key = value`` lines into a field-name -> raw string mapping.

    Raises:
        ConfigError: malformed line or unknown key (with line number)
    """
    values: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = stripped.split("=", 1)
        try:
            values[normalize_key(key)] = value.strip()
        except ConfigError as e:
            raise ConfigError(f"{source}:{lineno}: {e.message}") from e
    return values


def load_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    return parse_config_text(text, source=path)


def build_experiment(
    profile: Optional[str] = None,
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merge profile, file, environment and flag values into one config.

    Raises:
        ConfigError: unknown profile / key or a value that fails validation
    """
    name = profile or DEFAULT_PROFILE
    preset = get_preset(name)
    if preset.long_running:
        logger.warning(f"[Config] profile {name!r} is long-running: {preset.description}")
    merged: Dict[str, Any] = dict(preset.values)
    if config_path:
        merged.update(load_config_file(config_path))
    if runtime_config.runtime.output_dir_override:
        merged["output_dir"] = runtime_config.runtime.output_dir_override
    for key, value in (overrides or {}).items():
        merged[normalize_key(key)] = value
    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {_first_error(e)}") from e


def content_hash(payload: Any, length: int = 12) -> str:
    """Short sha256 of a canonical JSON rendering"""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:length]
