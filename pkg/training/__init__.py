"""
Training layer - losses, optimizer and the training loop

Provides:
- LabeledSample, ObservedSample, TrainConfig
- loss_labeled / loss_unlabeled: per-sample hybrid and PINN losses
- batch_loss: mini-batch form used by the trainer
- Adam

The training loop and λ cross-validation live in ``training.trainer`` and
``training.cross_validation`` (they depend on ``evaluation``).
"""
from .schemas import LabeledSample, ObservedSample, TrainConfig
from .losses import loss_labeled, loss_unlabeled, combine_hybrid, batch_loss, render_predictions
from .optimizer import Adam, AdamState

__all__ = [
    "LabeledSample",
    "ObservedSample",
    "TrainConfig",
    "loss_labeled",
    "loss_unlabeled",
    "combine_hybrid",
    "batch_loss",
    "render_predictions",
    "Adam",
    "AdamState",
]
