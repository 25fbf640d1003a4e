"""사인/코사인 위치 인코딩."""

import numpy as np

from core import ops
from core.errors import ShapeError
from core.tensor import Tensor
from layers.base import Layer
from layers.linear import Linear

PE_BASE = 10000.0


def positional_encoding(length: int, d_model: int) -> Tensor:
    """PE[p, 2i] = sin(p / 10000^(2i/d)), PE[p, 2i+1] = cos(같은 각)."""
    if d_model % 2:
        raise ShapeError(f"positional_encoding: d_model은 짝수여야 합니다 ({d_model})")
    pos = np.arange(length, dtype=np.float64)[:, None]
    freq = PE_BASE ** (np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    pe = np.zeros((length, d_model))
    pe[:, 0::2] = np.sin(pos / freq)
    pe[:, 1::2] = np.cos(pos / freq)
    return Tensor(pe)


class DataEmbedding(Layer):
    """값 투영(Linear m → d_model) + 위치 인코딩."""

    def __init__(self, n_features: int, d_model: int, rng: np.random.Generator):
        self.value = Linear(n_features, d_model, rng)
        self.d_model = d_model

    def forward(self, x: Tensor) -> Tensor:
        pe = positional_encoding(x.shape[-2], self.d_model)
        return ops.add(self.value(x), ops.reshape(pe, (1,) * (x.ndim - 2) + pe.shape))
