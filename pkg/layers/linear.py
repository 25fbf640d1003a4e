"""완전 연결 레이어."""

import numpy as np

from core import ops
from core.errors import ShapeError
from core.tensor import Tensor, parameter
from layers.base import Layer, uniform_init


def linear_forward(layer: "Linear", x: Tensor) -> Tensor:
    """y = xWᵀ + b (bias가 없으면 xWᵀ). x의 마지막 차원이 in_features여야 한다."""
    if x.shape[-1] != layer.in_features:
        raise ShapeError(f"linear: 입력 {x.shape}의 마지막 차원 != in_features {layer.in_features}")
    flat = x if x.ndim >= 2 else ops.reshape(x, (1, x.shape[0]))
    y = ops.matmul(flat, ops.transpose(layer.weight))
    if layer.bias is not None:
        y = ops.add(y, ops.reshape(layer.bias, (1,) * (y.ndim - 1) + (layer.out_features,)))
    return y if x.ndim >= 2 else ops.reshape(y, (layer.out_features,))


class Linear(Layer):
    """weight [out × in], bias [out] (bias=False면 None)."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 zero_init: bool = False, bias: bool = True):
        self.in_features = in_features
        self.out_features = out_features
        if zero_init:
            w = np.zeros((out_features, in_features))
        else:
            w = uniform_init(rng, (out_features, in_features), in_features)
        self.weight = parameter(w, "weight")
        self.bias: Tensor | None = None
        if bias:
            b = np.zeros(out_features) if zero_init else uniform_init(rng, (out_features,), in_features)
            self.bias = parameter(b, "bias")

    @classmethod
    def from_arrays(cls, weight: np.ndarray, bias: np.ndarray | None = None) -> "Linear":
        layer = cls.__new__(cls)
        layer.out_features, layer.in_features = weight.shape
        layer.weight = parameter(weight, "weight")
        layer.bias = None if bias is None else parameter(bias, "bias")
        return layer

    def forward(self, x: Tensor) -> Tensor:
        return linear_forward(self, x)
