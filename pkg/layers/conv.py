"""1차원 합성곱 (cross-correlation, 커널 뒤집기 없음)."""

import numpy as np

from core import ops
from core.errors import ShapeError
from core.tensor import Tensor, parameter
from layers.base import Layer, uniform_init


def conv1d(x: Tensor, kernels: Tensor, stride: int = 1, padding: int = 0,
           bias: Tensor | None = None) -> Tensor:
    """x [batch × channels × L], kernels [out × channels × k] → [batch × out × L_out].

    L_out = ⌊(L + 2·padding − k)/stride⌋ + 1. 패딩 값은 0이다.
    """
    if x.ndim != 3 or kernels.ndim != 3 or x.shape[1] != kernels.shape[1]:
        raise ShapeError(f"conv1d: 입력 {x.shape} 와 커널 {kernels.shape} 채널 불일치")
    batch, channels, length = x.shape
    out_ch, _, k = kernels.shape
    if stride < 1 or padding < 0 or k > length + 2 * padding:
        raise ShapeError(
            f"conv1d: 잘못된 기하 (L={length}, k={k}, stride={stride}, padding={padding})"
        )
    if padding:
        pad = Tensor(np.zeros((batch, channels, padding)))
        x = ops.concat([pad, x, pad], axis=2)
    l_out = (length + 2 * padding - k) // stride + 1
    idx = np.arange(l_out)[:, None] * stride + np.arange(k)[None, :]
    windows = ops.take(x, idx, axis=2)                       # [B, C, L_out, k]
    windows = ops.transpose(windows, (0, 2, 1, 3))
    windows = ops.reshape(windows, (batch, l_out, channels * k))
    y = ops.matmul(windows, ops.transpose(ops.reshape(kernels, (out_ch, channels * k))))
    if bias is not None:
        y = ops.add(y, ops.reshape(bias, (1, 1, out_ch)))
    return ops.transpose(y, (0, 2, 1))


class Conv1d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator, stride: int = 1, padding: int = 0):
        fan_in = in_channels * kernel_size
        self.weight = parameter(uniform_init(rng, (out_channels, in_channels, kernel_size), fan_in), "weight")
        self.bias = parameter(uniform_init(rng, (out_channels,), fan_in), "bias")
        self.stride = stride
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return conv1d(x, self.weight, self.stride, self.padding, self.bias)
