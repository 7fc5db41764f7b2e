"""
Adam with bias correction, updating parameter arrays in place.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from infrastructure.errors import DimensionError


@dataclass
class AdamState:
    """Moment estimates; persisted in the optional checkpoint section"""
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)


class Adam:
    def __init__(
        self,
        params: Sequence[np.ndarray],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        state: Optional[AdamState] = None,
    ):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        if state is None:
            state = AdamState(
                m=[np.zeros_like(p) for p in self.params],
                v=[np.zeros_like(p) for p in self.params],
            )
        shapes = [p.shape for p in self.params]
        if [m.shape for m in state.m] != shapes or [v.shape for v in state.v] != shapes:
            raise DimensionError("optimizer state does not match parameter shapes")
        self.state = state

    def step(self, grads: Sequence[np.ndarray]) -> None:
        """θ ← θ − lr·m̂/(√v̂ + ε)"""
        if len(grads) != len(self.params):
            raise DimensionError(f"{len(grads)} gradients for {len(self.params)} parameters")
        s = self.state
        s.step += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** s.step
        c2 = 1.0 - b2 ** s.step
        for p, g, m, v in zip(self.params, grads, s.m, s.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)
