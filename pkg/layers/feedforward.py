"""드롭아웃 없는 위치별 feed-forward 블록."""

import numpy as np

from core import ops
from core.tensor import Tensor
from layers.base import Layer
from layers.linear import Linear


class FeedForward(Layer):
    """Linear(d → d_ff) → 활성 → Linear(d_ff → d)."""

    def __init__(self, d_model: int, d_ff: int, rng: np.random.Generator, activation: str = "gelu"):
        self.up = Linear(d_model, d_ff, rng)
        self.down = Linear(d_ff, d_model, rng)
        self.activation = activation

    def forward(self, x: Tensor) -> Tensor:
        return self.down(ops.activation(self.activation, self.up(x)))
