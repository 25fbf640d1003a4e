"""LSTM 셀과 다층 LSTM.

게이트 배치 순서는 [i, f, g, o] 이다 (가중치 행 블록 순서).
"""

from dataclasses import dataclass

import numpy as np

from core import ops
from core.errors import ShapeError
from core.tensor import Tensor, parameter
from layers.base import Layer, uniform_init


@dataclass
class LstmCellState:
    """hidden, cell: [batch × units]."""
    hidden: Tensor
    cell: Tensor

    def __post_init__(self):
        if self.hidden.shape != self.cell.shape:
            raise ShapeError(f"LSTM 상태 shape 불일치: {self.hidden.shape} vs {self.cell.shape}")

    @classmethod
    def zeros(cls, batch: int, units: int) -> "LstmCellState":
        return cls(Tensor(np.zeros((batch, units))), Tensor(np.zeros((batch, units))))


class LSTMCell(Layer):
    """weight_ih [4u × in], weight_hh [4u × u], bias [4u]."""

    def __init__(self, input_size: int, units: int, rng: np.random.Generator):
        self.input_size = input_size
        self.units = units
        self.weight_ih = parameter(uniform_init(rng, (4 * units, input_size), input_size), "weight_ih")
        self.weight_hh = parameter(uniform_init(rng, (4 * units, units), units), "weight_hh")
        self.bias = parameter(uniform_init(rng, (4 * units,), units), "bias")

    def forward(self, x_t: Tensor, state: LstmCellState) -> tuple[Tensor, LstmCellState]:
        return lstm_cell(x_t, state, self)


def lstm_cell(x_t: Tensor, state: LstmCellState, params: LSTMCell) -> tuple[Tensor, LstmCellState]:
    """f,i,o = σ(affine), g = tanh(affine), c' = f⊙c + i⊙g, h' = o⊙tanh(c')."""
    u = params.units
    if x_t.ndim != 2 or x_t.shape[1] != params.input_size or state.hidden.shape != (x_t.shape[0], u):
        raise ShapeError(
            f"lstm_cell: 입력 {x_t.shape}, 상태 {state.hidden.shape} 가 파라미터 (in={params.input_size}, u={u})와 맞지 않습니다"
        )
    z = ops.add(
        ops.add(ops.matmul(x_t, ops.transpose(params.weight_ih)),
                ops.matmul(state.hidden, ops.transpose(params.weight_hh))),
        ops.reshape(params.bias, (1, 4 * u)),
    )
    i = ops.sigmoid(z[:, 0:u])
    f = ops.sigmoid(z[:, u:2 * u])
    g = ops.tanh(z[:, 2 * u:3 * u])
    o = ops.sigmoid(z[:, 3 * u:4 * u])
    c_new = ops.add(ops.mul(f, state.cell), ops.mul(i, g))
    h_new = ops.mul(o, ops.tanh(c_new))
    return h_new, LstmCellState(h_new, c_new)


class LSTM(Layer):
    """층을 쌓은 LSTM. 입력 [batch × T × in] → 마지막 층 hidden 시퀀스 [batch × T × u]."""

    def __init__(self, input_size: int, units: int, n_layers: int, rng: np.random.Generator):
        self.units = units
        self.cells = [LSTMCell(input_size if i == 0 else units, units, rng) for i in range(n_layers)]

    def forward(self, x: Tensor) -> tuple[Tensor, list[LstmCellState]]:
        batch, steps, _ = x.shape
        states = [LstmCellState.zeros(batch, self.units) for _ in self.cells]
        outputs = []
        for t in range(steps):
            h = x[:, t, :]
            for layer, cell in enumerate(self.cells):
                h, states[layer] = cell(h, states[layer])
            outputs.append(ops.reshape(h, (batch, 1, self.units)))
        return ops.concat(outputs, axis=1), states
