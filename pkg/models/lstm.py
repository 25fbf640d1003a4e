"""LSTM 기준 모델: 적층 LSTM → 마지막 hidden → Linear(units → H)."""

import numpy as np

from core import ops
from core.tensor import Tensor
from layers.linear import Linear
from layers.recurrent import LSTM
from models.base import N_TARGETS, ForecastModel, ModelKind, ModelSpec


class LstmForecaster(ForecastModel):
    kind = ModelKind.LSTM

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        super().__init__(spec)
        plan = spec.lstm
        self.lstm = LSTM(spec.n_features, plan.units, plan.n_layers, rng)
        self.head = Linear(plan.units, spec.horizon * N_TARGETS, rng)

    def predict_batch(self, x: Tensor, future_time: Tensor | None) -> Tensor:
        _, states = self.lstm(x)
        hidden = self.check_finite("lstm", states[-1].hidden)
        return ops.reshape(self.head(hidden), (x.shape[0], self.spec.horizon, N_TARGETS))
