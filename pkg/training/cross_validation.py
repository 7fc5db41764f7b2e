"""
λ selection by hold-out validation on the simulated pool.
"""
from typing import List, Sequence, Tuple

from agno.utils.log import logger
from pydantic import BaseModel

from datagen.rng import CV_SPLIT, permutation
from evaluation.metrics import RunMetrics, evaluate
from infrastructure.errors import ContractError
from .schemas import LabeledSample, ObservedSample, TrainConfig
from .trainer import train

HOLDOUT_FRACTION = 0.2
MIN_LABELED = 5


class LambdaResult(BaseModel):
    """One row of the λ table"""
    lam: float
    metrics: RunMetrics

    @property
    def score(self) -> float:
        return self.metrics.total_parameter_mse


def split_labeled(
    labeled: Sequence[LabeledSample],
    seed: int,
) -> Tuple[List[LabeledSample], List[LabeledSample]]:
    """Seeded (train, held-out) split holding out 20% of the pool (at least one sample)"""
    n = len(labeled)
    order = permutation(seed, CV_SPLIT, n)
    n_hold = max(1, int(round(HOLDOUT_FRACTION * n)))
    held = sorted(int(k) for k in order[:n_hold])
    kept = sorted(int(k) for k in order[n_hold:])
    return [labeled[k] for k in kept], [labeled[k] for k in held]


def cross_validate_lambda(
    base_config: TrainConfig,
    labeled: Sequence[LabeledSample],
    observed: Sequence[ObservedSample],
    grid: Sequence[float],
) -> Tuple[float, List[LambdaResult]]:
    """
    Train once per λ and pick the one with the lowest held-out total parameter MSE.

    Ties go to the smaller λ.

    Returns:
        (best λ, one LambdaResult per grid entry in grid order)

    Raises:
        ContractError: empty grid, λ outside (0, 1) or fewer than 5 labeled samples
    """
    if not grid:
        raise ContractError("lambda grid is empty")
    for lam in grid:
        if not 0.0 < lam < 1.0:
            raise ContractError(f"lambda {lam} outside (0, 1)")
    if len(labeled) < MIN_LABELED:
        raise ContractError(f"cross-validation needs at least {MIN_LABELED} labeled samples, got {len(labeled)}")

    train_pool, held = split_labeled(labeled, base_config.seed)
    held_out = [ObservedSample(y=s.y, x_hidden=s.x) for s in held]
    logger.info(f"[CV] {len(grid)} λ values, train {len(train_pool)} / held-out {len(held_out)} labeled")

    table: List[LambdaResult] = []
    for lam in grid:
        config = base_config.model_copy(update={
            "lam": float(lam),
            "n_simulated": len(train_pool),
            "n_observed": len(observed),
        })
        params, train_metrics = train(config, train_pool, observed)
        metrics = evaluate(params, held_out, config.physics)
        metrics = metrics.model_copy(update={"loss_history": train_metrics.loss_history})
        table.append(LambdaResult(lam=float(lam), metrics=metrics))
        logger.info(f"[CV] λ={lam}: held-out total parameter MSE {metrics.total_parameter_mse:.6e}")

    best = min(table, key=lambda row: (row.score, row.lam))
    return best.lam, table
