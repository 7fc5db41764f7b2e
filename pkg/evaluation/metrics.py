"""
Test-set metrics: per-parameter MSE against the hidden elements and per-pixel
reconstruction MSE through the forward operator.
"""
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, Field

from infrastructure.errors import ContractError, DimensionError
from model.mlp import MlpParams, as_input_matrix, decode, predict
from physics.render import render
from physics.schemas import PhysicsConstants
from training.schemas import ObservedSample

# Predictions are made in chunks of this many images
EVAL_CHUNK = 256


class RunMetrics(BaseModel):
    """Errors of one run (parameter MSEs use raw angle differences, no wrap)"""
    mse_e: float = Field(default=0.0, ge=0.0)
    mse_i: float = Field(default=0.0, ge=0.0)
    mse_omega: float = Field(default=0.0, ge=0.0)
    mse_reconstruction: float = Field(default=0.0, ge=0.0)
    loss_history: List[float] = Field(default_factory=list, description="Mean training loss per epoch")
    n_samples: int = Field(default=0, ge=0, description="Samples the errors average over")

    @property
    def total_parameter_mse(self) -> float:
        return self.mse_e + self.mse_i + self.mse_omega

    def table_row(self) -> dict:
        """The four errors reported per sweep cell"""
        return {
            "mse_e": self.mse_e,
            "mse_i": self.mse_i,
            "mse_omega": self.mse_omega,
            "mse_reconstruction": self.mse_reconstruction,
        }


class SampleErrors(BaseModel):
    """Errors of one test observation"""
    index: int
    sq_err_e: float
    sq_err_i: float
    sq_err_omega: float
    mse_reconstruction: float


def sample_errors(
    predictions: np.ndarray,
    test: Sequence[ObservedSample],
    physics: PhysicsConstants,
) -> List[SampleErrors]:
    """
    Per-sample squared parameter errors and reconstruction MSE.

    Args:
        predictions: 3×B network outputs, column j for ``test[j]``
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    if predictions.shape != (3, len(test)):
        raise DimensionError(f"predictions {predictions.shape} for {len(test)} test samples")
    rows = []
    for j, (sample, x_hat) in enumerate(zip(test, decode(predictions))):
        sq = (predictions[:, j] - sample.x_hidden.as_array()) ** 2
        diff = render(x_hat, physics).pixels - sample.y.pixels
        rows.append(SampleErrors(
            index=j,
            sq_err_e=float(sq[0]),
            sq_err_i=float(sq[1]),
            sq_err_omega=float(sq[2]),
            mse_reconstruction=float(np.mean(diff * diff)),
        ))
    return rows


def evaluate_predictions(
    predictions: np.ndarray,
    test: Sequence[ObservedSample],
    physics: PhysicsConstants,
) -> RunMetrics:
    """Metrics of arbitrary predictions (a trained network, a constant, the truth)"""
    if len(test) == 0:
        raise ContractError("evaluate: test set is empty")
    rows = sample_errors(predictions, test, physics)
    return RunMetrics(
        mse_e=float(np.mean([r.sq_err_e for r in rows])),
        mse_i=float(np.mean([r.sq_err_i for r in rows])),
        mse_omega=float(np.mean([r.sq_err_omega for r in rows])),
        mse_reconstruction=float(np.mean([r.mse_reconstruction for r in rows])),
        n_samples=len(rows),
    )


def predict_pool(params: MlpParams, samples: Sequence) -> np.ndarray:
    """ψ(y, θ) for every sample's image, 3×len(samples)"""
    out = np.empty((3, len(samples)))
    for start in range(0, len(samples), EVAL_CHUNK):
        chunk = samples[start:start + EVAL_CHUNK]
        out[:, start:start + len(chunk)] = predict(params, as_input_matrix([s.y for s in chunk]))
    return out


def evaluate(params: MlpParams, test: Sequence[ObservedSample], physics: PhysicsConstants) -> RunMetrics:
    """
    Means over the test set of the parameter and reconstruction errors.

    Raises:
        ContractError: empty test set
    """
    if len(test) == 0:
        raise ContractError("evaluate: test set is empty")
    return evaluate_predictions(predict_pool(params, list(test)), test, physics)
