"""
PINN and hybrid (SimPINNs) losses on the autodiff tape.

The render term enters the tape through ``inject_external_vjp`` with the
forward-mode Jacobian of the operator, so gradients flow from the
reconstruction error back through ψ into θ.

``loss_labeled`` / ``loss_unlabeled`` are the per-sample reference
definitions; ``batch_loss`` is the mini-batch form used by the trainer.
"""
from typing import Optional

import numpy as np

from autodiff import Tape, TapeValue, add, column_weighted_mse, inject_external_vjp, mse, scale
from config import config
from infrastructure.errors import ContractError
from model.mlp import MlpParams, decode, forward
from physics.render import render_jacobians
from physics.schemas import PhysicsConstants, SensorImage
from .schemas import LabeledSample


def render_predictions(tape: Tape, x_hat: TapeValue, physics: PhysicsConstants) -> TapeValue:
    """f̂(x_hat) for every column of x_hat, recorded with its Jacobian (p×B)"""
    images, jacobians = render_jacobians(decode(x_hat.data), physics, threads=config.runtime.render_threads)
    return inject_external_vjp(tape, x_hat, images, jacobians)


def _reconstruction(
    tape: Tape,
    params: MlpParams,
    y: SensorImage,
    physics: PhysicsConstants,
) -> tuple:
    x_hat = forward(tape, params, y)
    rendered = render_predictions(tape, x_hat, physics)
    return x_hat, mse(tape, tape.constant(y.column()), rendered)


def loss_unlabeled(tape: Tape, params: MlpParams, y: SensorImage, physics: PhysicsConstants) -> TapeValue:
    """PINN summand ‖y − f̂(ψ(y, θ))‖² as a per-pixel mean"""
    _, recon = _reconstruction(tape, params, y, physics)
    return recon


def loss_labeled(
    tape: Tape,
    params: MlpParams,
    sample: LabeledSample,
    lam: float,
    physics: PhysicsConstants,
) -> TapeValue:
    """
    Hybrid summand λ·mse(y, f̂(ψ(y,θ))) + (1−λ)·mse(ψ(y,θ), x).

    At λ = 1 the value equals ``loss_unlabeled`` exactly; at λ = 0 it equals
    the parameter term exactly.
    """
    if not 0.0 <= lam <= 1.0:
        raise ContractError(f"lambda must lie in [0, 1], got {lam}")
    x_hat, recon = _reconstruction(tape, params, sample.y, physics)
    param = mse(tape, x_hat, tape.constant(sample.x.as_array()))
    return combine_hybrid(tape, recon, param, lam)


def combine_hybrid(tape: Tape, recon: TapeValue, param: TapeValue, lam: float) -> TapeValue:
    return add(tape, scale(tape, recon, lam), scale(tape, param, 1.0 - lam))


def batch_loss(
    tape: Tape,
    params: MlpParams,
    images: np.ndarray,
    targets: np.ndarray,
    recon_weights: np.ndarray,
    param_weights: np.ndarray,
    physics: Optional[PhysicsConstants],
) -> TapeValue:
    """
    Mean over the B columns of w_r·mse(y, f̂(ψ(y))) + w_p·mse(ψ(y), x).

    Args:
        images: p×B observations / simulated images
        targets: 3×B parameters (ignored where the parameter weight is 0)
        recon_weights: Per-sample weight of the reconstruction term
        param_weights: Per-sample weight of the parameter term
        physics: Forward operator constants; unused when every recon weight is 0
    """
    x_hat = forward(tape, params, images)
    param = column_weighted_mse(tape, x_hat, tape.constant(targets), param_weights)
    if not np.any(recon_weights):
        return param
    rendered = render_predictions(tape, x_hat, physics)
    recon = column_weighted_mse(tape, rendered, tape.constant(images), recon_weights)
    return add(tape, recon, param)
