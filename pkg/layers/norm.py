"""Layer normalization."""

import numpy as np

from core import ops
from core.errors import ShapeError
from core.tensor import Tensor, parameter
from layers.base import Layer

LAYER_NORM_EPS = 1e-5


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """마지막 축 기준 평균 0·분산 1로 정규화한 뒤 γ, β를 적용한다."""
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(f"layer_norm: γ {gamma.shape}, β {beta.shape} 가 마지막 차원 {d}와 다릅니다")
    mu = ops.mean(x, axis=-1, keepdims=True)
    centered = ops.sub(x, mu)
    var = ops.mean(ops.square(centered), axis=-1, keepdims=True)
    normed = ops.div(centered, ops.sqrt(ops.shift(var, eps)))
    shape = (1,) * (x.ndim - 1) + (d,)
    return ops.add(ops.mul(normed, ops.reshape(gamma, shape)), ops.reshape(beta, shape))


class LayerNorm(Layer):
    def __init__(self, d: int, eps: float = LAYER_NORM_EPS):
        self.gamma = parameter(np.ones(d), "gamma")
        self.beta = parameter(np.zeros(d), "beta")
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)
