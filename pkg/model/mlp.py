"""
The inverter network ψ(y, θ): flattened sensor image -> (e, i, ω).

Dense ReLU hidden layers, a linear output layer and a sigmoid head scaled to
(e_max, 2π, 2π), so every decoded prediction is a valid OrbitalElements.
"""
import copy as _copy
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from autodiff import Tape, TapeValue, affine, relu, scale, sigmoid
from datagen.rng import MLP_INIT, generator
from infrastructure.errors import ContractError, DimensionError
from physics.schemas import OrbitalElements, SensorImage, TWO_PI

FULL_SCALE_HIDDEN = [784, 784, 784, 784, 784]


# =============================================================================
# Architecture
# =============================================================================

class MlpArchitecture(BaseModel):
    """Layer widths of the inverter"""
    input_dim: int = Field(ge=1, description="Number of pixels (width·height)")
    hidden_dims: List[int] = Field(default_factory=list, description="Hidden layer widths")
    output_dim: int = Field(default=3, description="Always 3: (e, i, ω)")

    @field_validator("hidden_dims")
    @classmethod
    def _positive_widths(cls, v: List[int]) -> List[int]:
        if any(w < 1 for w in v):
            raise ValueError(f"hidden widths must be >= 1, got {v}")
        return v

    @field_validator("output_dim")
    @classmethod
    def _three_outputs(cls, v: int) -> int:
        if v != 3:
            raise ValueError("output_dim must be 3")
        return v

    @classmethod
    def full_scale(cls) -> "MlpArchitecture":
        return cls(input_dim=64 * 64, hidden_dims=list(FULL_SCALE_HIDDEN))

    @classmethod
    def for_image(cls, width: int, height: int, hidden_dims: Sequence[int]) -> "MlpArchitecture":
        return cls(input_dim=width * height, hidden_dims=list(hidden_dims))

    @property
    def layer_shapes(self) -> List[Tuple[int, int]]:
        """(out, in) per dense layer, input -> output"""
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return [(dims[k + 1], dims[k]) for k in range(len(dims) - 1)]

    @property
    def parameter_count(self) -> int:
        return sum(m * n + m for m, n in self.layer_shapes)


# =============================================================================
# Parameters
# =============================================================================

def head_ranges_for(e_max: float) -> np.ndarray:
    return np.array([e_max, TWO_PI, TWO_PI], dtype=np.float64)


@dataclass
class MlpParams:
    """θ: per-layer weights (out×in) and biases (out×1)"""
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    arch: MlpArchitecture
    head_ranges: np.ndarray = field(default_factory=lambda: head_ranges_for(0.95))

    def __post_init__(self):
        shapes = self.arch.layer_shapes
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise DimensionError(
                f"expected {len(shapes)} layers, got {len(self.weights)} weights / {len(self.biases)} biases"
            )
        for k, ((m, n), W, b) in enumerate(zip(shapes, self.weights, self.biases)):
            if W.shape != (m, n) or b.shape != (m, 1):
                raise DimensionError(f"layer {k}: W{W.shape} b{b.shape}, expected W{(m, n)} b{(m, 1)}")
        self.head_ranges = np.asarray(self.head_ranges, dtype=np.float64).reshape(3)
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise ContractError("network parameters must be finite")

    def arrays(self) -> List[np.ndarray]:
        """Parameter arrays in layer order: W0, b0, W1, b1, ..."""
        out: List[np.ndarray] = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[W.copy() for W in self.weights],
            biases=[b.copy() for b in self.biases],
            arch=_copy.deepcopy(self.arch),
            head_ranges=self.head_ranges.copy(),
        )

    @property
    def e_max(self) -> float:
        return float(self.head_ranges[0])


def init(arch: MlpArchitecture, seed: int, e_max: float = 0.95) -> MlpParams:
    """He-normal weights (std √(2/fan_in)) from the seeded ``mlp`` stream; zero biases"""
    weights, biases = [], []
    for k, (m, n) in enumerate(arch.layer_shapes):
        rng = generator(seed, f"{MLP_INIT}/layer{k}")
        weights.append(rng.standard_normal((m, n)) * np.sqrt(2.0 / n))
        biases.append(np.zeros((m, 1)))
    return MlpParams(weights=weights, biases=biases, arch=arch, head_ranges=head_ranges_for(e_max))


def zeros_like(params: MlpParams) -> MlpParams:
    """All-zero parameters: the network predicts the prior mean (e_max/2, π, π)"""
    return MlpParams(
        weights=[np.zeros_like(W) for W in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
        arch=params.arch,
        head_ranges=params.head_ranges.copy(),
    )


# =============================================================================
# Forward
# =============================================================================

ImageBatch = Union[SensorImage, Sequence[SensorImage], np.ndarray]


def as_input_matrix(y: ImageBatch) -> np.ndarray:
    """Row-major flattened image(s) as a p×B column matrix"""
    if isinstance(y, SensorImage):
        return y.column()
    if isinstance(y, np.ndarray):
        return y.reshape(-1, 1) if y.ndim == 1 else y
    return np.concatenate([img.column() for img in y], axis=1)


def forward(tape: Tape, params: MlpParams, y: Union[ImageBatch, TapeValue]) -> TapeValue:
    """
    Record ψ(y, θ) on ``tape``.

    Args:
        tape: Tape to record on
        params: Network parameters (bound with ``tape.param``)
        y: One image, a list of images, a p×B matrix or an existing tape value

    Returns:
        x_hat as a 3×B TapeValue, rows (e, i, ω)

    Raises:
        DimensionError: input size differs from ``arch.input_dim``
    """
    h = y if isinstance(y, TapeValue) else tape.constant(as_input_matrix(y))
    if h.shape[0] != params.arch.input_dim:
        raise DimensionError(f"network expects {params.arch.input_dim} inputs, got {h.shape[0]}")

    last = len(params.weights) - 1
    for k, (W, b) in enumerate(zip(params.weights, params.biases)):
        h = affine(tape, tape.param(W), h, tape.param(b))
        if k < last:
            h = relu(tape, h)
    return scale(tape, sigmoid(tape, h), params.head_ranges)


def predict(params: MlpParams, y: ImageBatch) -> np.ndarray:
    """ψ(y, θ) values only, 3×B"""
    return forward(Tape(), params, y).data


def decode(x_hat: np.ndarray) -> List[OrbitalElements]:
    """3×B predictions -> one OrbitalElements per column"""
    x_hat = np.asarray(x_hat, dtype=np.float64).reshape(3, -1)
    return [OrbitalElements.from_vector(x_hat[:, j]) for j in range(x_hat.shape[1])]
