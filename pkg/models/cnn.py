"""CNN 기준 모델: (conv1d → relu) × n → flatten → Linear(→ H)."""

import numpy as np

from core import ops
from core.tensor import Tensor
from layers.conv import Conv1d
from layers.linear import Linear
from models.base import N_TARGETS, ForecastModel, ModelKind, ModelSpec


class CnnForecaster(ForecastModel):
    kind = ModelKind.CNN

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        super().__init__(spec)
        plan = spec.cnn
        k = plan.kernel_size
        channels = (spec.n_features,) + tuple(plan.channels)
        # 홀수 커널은 same 패딩, 짝수면 길이가 줄어든다
        self.convs = [Conv1d(c_in, c_out, k, rng, padding=(k - 1) // 2)
                      for c_in, c_out in zip(channels[:-1], channels[1:])]
        length = spec.lookback
        for _ in self.convs:
            length = length + 2 * ((k - 1) // 2) - k + 1
        self.flat_dim = channels[-1] * length
        self.head = Linear(self.flat_dim, spec.horizon * N_TARGETS, rng)

    def predict_batch(self, x: Tensor, future_time: Tensor | None) -> Tensor:
        h = ops.swapaxes(x, 1, 2)  # [B, m, L]
        for i, conv in enumerate(self.convs):
            h = self.check_finite(f"conv.{i}", ops.relu(conv(h)))
        flat = ops.reshape(h, (x.shape[0], self.flat_dim))
        return ops.reshape(self.head(flat), (x.shape[0], self.spec.horizon, N_TARGETS))
