"""
Trainer - Adam over the shuffled union of the simulated and observed pools.

Per-sample weights of the two loss terms:

    simulated pair     recon λ            param (1 − λ)
    observed sample    recon λ (or 1)     param 0
    supervised run     recon 0            param 1  (observed pool unused)

A mini-batch loss is the mean of its per-sample losses; the epoch loss in
``loss_history`` is the sample-weighted mean of the batch losses.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from agno.utils.log import logger

from autodiff import Tape, backward
from datagen.rng import SHUFFLE, permutation
from evaluation.metrics import RunMetrics, evaluate
from infrastructure.errors import ContractError, NumericError
from infrastructure.observability import observe
from model.mlp import MlpParams, init
from .losses import batch_loss
from .optimizer import Adam, AdamState
from .schemas import LabeledSample, ObservedSample, TrainConfig, pool_sizes


class Trainer:
    """
    One training run.

    Usage:
        trainer = Trainer(config, labeled, observed)
        params, metrics = trainer.run()
        trainer.optimizer.state  # persisted with the checkpoint
    """

    def __init__(
        self,
        config: TrainConfig,
        labeled: Sequence[LabeledSample],
        observed: Sequence[ObservedSample],
        params: Optional[MlpParams] = None,
        optimizer_state: Optional[AdamState] = None,
    ):
        if len(labeled) != config.n_simulated or len(observed) != config.n_observed:
            raise ContractError(
                f"pool sizes {pool_sizes(list(labeled), list(observed))} do not match "
                f"config N_s={config.n_simulated}, N_o={config.n_observed}"
            )
        self.config = config
        self.labeled = list(labeled)
        self.observed = list(observed) if config.objective == "hybrid" else []
        self.params = params.copy() if params is not None else init(
            config.arch, config.seed, config.physics.e_max
        )
        self.optimizer = Adam(
            self.params.arrays(),
            learning_rate=config.learning_rate,
            beta1=config.adam_beta1,
            beta2=config.adam_beta2,
            eps=config.adam_eps,
            state=optimizer_state,
        )
        self._images, self._targets, self._recon_w, self._param_w = self._stack_pools()

    def _stack_pools(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        c = self.config
        n_s, n_o = len(self.labeled), len(self.observed)
        images = np.empty((c.physics.pixel_count, n_s + n_o))
        targets = np.zeros((3, n_s + n_o))
        for j, s in enumerate(self.labeled):
            images[:, j] = s.y.pixels.reshape(-1)
            targets[:, j] = s.x.as_array()
        for j, s in enumerate(self.observed):
            images[:, n_s + j] = s.y.pixels.reshape(-1)

        recon_w = np.empty(n_s + n_o)
        param_w = np.zeros(n_s + n_o)
        if c.objective == "supervised":
            recon_w[:] = 0.0
            param_w[:n_s] = 1.0
        else:
            recon_w[:n_s] = c.lam
            recon_w[n_s:] = c.lam if c.observed_weight == "lambda" else 1.0
            param_w[:n_s] = 1.0 - c.lam
        return images, targets, recon_w, param_w

    def _epoch(self, epoch: int) -> float:
        c = self.config
        n = self._images.shape[1]
        if n == 0:
            return 0.0
        order = permutation(c.seed, f"{SHUFFLE}/epoch{epoch}", n)
        weighted_sum = 0.0
        for b, start in enumerate(range(0, n, c.batch_size)):
            idx = order[start:start + c.batch_size]
            tape = Tape()
            try:
                loss = batch_loss(
                    tape,
                    self.params,
                    self._images[:, idx],
                    self._targets[:, idx],
                    self._recon_w[idx],
                    self._param_w[idx],
                    c.physics,
                )
            except NumericError as e:
                raise NumericError(
                    f"epoch {epoch}, batch {b}: {e.message}",
                    detail={**e.detail, "epoch": epoch, "batch": b},
                ) from e
            value = loss.item()
            if not math.isfinite(value):
                raise NumericError(
                    f"non-finite loss {value} at epoch {epoch}, batch {b}",
                    detail={"epoch": epoch, "batch": b},
                )
            backward(tape, loss)
            self.optimizer.step([tape.grad_of(a) for a in self.params.arrays()])
            weighted_sum += value * len(idx)
            logger.debug(f"[Train] epoch {epoch} batch {b} loss={value:.6e}")
        return weighted_sum / n

    def fit(self) -> List[float]:
        """Run every epoch; returns the per-epoch mean loss"""
        c = self.config
        history: List[float] = []
        logger.info(
            f"[Train] {c.method}: {pool_sizes(self.labeled, self.observed)}, "
            f"λ={c.lam}, epochs={c.epochs}, batch={c.batch_size}, seed={c.seed}"
        )
        for epoch in range(c.epochs):
            history.append(self._epoch(epoch))
            if (epoch + 1) % c.log_every == 0 or epoch + 1 == c.epochs:
                logger.info(f"[Train] epoch {epoch + 1}/{c.epochs} loss={history[-1]:.6e}")
        return history

    def training_metrics(self, history: List[float]) -> RunMetrics:
        """Errors on the training pools (hidden elements used for reporting only)"""
        pool = [ObservedSample(y=s.y, x_hidden=s.x) for s in self.labeled] + self.observed
        if not pool:
            return RunMetrics(loss_history=history)
        metrics = evaluate(self.params, pool, self.config.physics)
        return metrics.model_copy(update={"loss_history": history})

    def run(self) -> Tuple[MlpParams, RunMetrics]:
        history = self.fit()
        return self.params, self.training_metrics(history)


@observe(name="simpinn.train")
def train(
    config: TrainConfig,
    labeled: Sequence[LabeledSample],
    observed: Sequence[ObservedSample],
) -> Tuple[MlpParams, RunMetrics]:
    """
    Train the inverter from seeded initial parameters.

    Args:
        config: Loss weighting, pool sizes, optimizer and model
        labeled: N_s simulated pairs
        observed: N_o observations (their hidden elements are never used by the loss)

    Returns:
        (final params, RunMetrics on the training pools with ``loss_history``)

    Raises:
        ContractError: pool sizes differ from the config counts
        NumericError: non-finite loss or derivative, with epoch / batch index
    """
    return Trainer(config, labeled, observed).run()
