"""ETSformer: 수준(level) + 성장(growth) + 계절(season) 분해 예측.

    X̂ = E + Linear(Σ_n (B⁽ⁿ⁾ + S⁽ⁿ⁾))

- 수준 E: 정규화된 목표 채널에 지수평활 어텐션을 적용한 마지막 값.
- 계절 S⁽ⁿ⁾: 각 인코더 층의 주파수 어텐션 외삽.
- 성장 B⁽ⁿ⁾: 잔차의 1차 차분에 지수평활 어텐션, 감쇠 누적으로 H 스텝 외삽.
출력 투영은 0으로 초기화한다.
"""

import numpy as np

from attention.smoothing import exponential_smoothing_attention, frequency_attention
from core import ops
from core.tensor import Tensor, parameter
from layers.base import Layer
from layers.feedforward import FeedForward
from layers.linear import Linear
from layers.norm import LayerNorm
from models.base import N_TARGETS, ForecastModel, ModelKind, ModelSpec


def first_difference(z: Tensor) -> Tensor:
    """[B, L, d] → [B, L, d]. 첫 행은 0."""
    b, length, d = z.shape
    head = Tensor(np.zeros((b, 1, d)))
    if length == 1:
        return head
    later = ops.getitem(z, (slice(None), slice(1, None)))
    earlier = ops.getitem(z, (slice(None), slice(0, length - 1)))
    return ops.concat([head, ops.sub(later, earlier)], axis=1)


def damped_steps(phi: Tensor, horizon: int) -> Tensor:
    """w_h = Σ_{i=1..h} φ^i, shape [1, H, 1]."""
    steps = Tensor(np.arange(1, horizon + 1, dtype=np.float64).reshape(1, horizon, 1))
    powers = ops.exp(ops.mul(steps, ops.reshape(ops.log(phi), (1, 1, 1))))
    return ops.cumsum(powers, axis=1)


class EtsEncoderLayer(Layer):
    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        self.growth_init = parameter(np.zeros(spec.d_model), "growth_init")
        self.norm1 = LayerNorm(spec.d_model)
        self.ffn = FeedForward(spec.d_model, spec.d_ff, rng, spec.activation)
        self.norm2 = LayerNorm(spec.d_model)
        self.top_k = spec.ets.top_k_freq
        self.horizon = spec.horizon

    def forward(self, z: Tensor, growth_alpha: Tensor, damping: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        """(잔차, 성장 외삽 [B, H, d], 계절 외삽 [B, H, d])."""
        season_in, season_out = frequency_attention(z, self.top_k, self.horizon)
        z = ops.sub(z, season_in)
        growth = exponential_smoothing_attention(first_difference(z), growth_alpha, self.growth_init)
        z = self.norm1(ops.sub(z, growth))
        z = self.norm2(ops.add(z, self.ffn(z)))
        last = ops.getitem(growth, (slice(None), slice(z.shape[1] - 1, None)))
        growth_out = ops.mul(last, damped_steps(damping, self.horizon))
        return z, growth_out, season_out


class ETSformer(ForecastModel):
    kind = ModelKind.ETSFORMER

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        super().__init__(spec)
        ets = spec.ets
        self.level_raw = parameter(np.array([ets.alpha]), "level_raw")
        self.growth_raw = parameter(np.array([ets.beta]), "growth_raw")
        self.damping_raw = parameter(np.array([ets.gamma]), "damping_raw")
        self.embedding = Linear(spec.n_features, spec.d_model, rng)
        self.encoder = [EtsEncoderLayer(spec, rng) for _ in range(spec.n_encoder_layers)]
        self.head = Linear(spec.d_model, N_TARGETS, rng, zero_init=True)

    def level(self, x: Tensor) -> Tensor:
        """목표 채널 지수평활의 마지막 값 [B, 1, 1]."""
        t = self.spec.target_index
        target = ops.getitem(x, (slice(None), slice(None), slice(t, t + 1)))
        start = ops.getitem(x, (slice(None), 0, slice(t, t + 1)))
        smoothed = exponential_smoothing_attention(target, ops.sigmoid(self.level_raw), start)
        return ops.getitem(smoothed, (slice(None), slice(x.shape[1] - 1, None)))

    def predict_batch(self, x: Tensor, future_time: Tensor | None) -> Tensor:
        spec = self.spec
        growth_alpha = ops.sigmoid(self.growth_raw)
        damping = ops.sigmoid(self.damping_raw)
        z = self.embedding(x)
        total = None
        for i, layer in enumerate(self.encoder):
            z, growth_out, season_out = layer(z, growth_alpha, damping)
            self.check_finite(f"encoder.{i}", z)
            part = ops.add(growth_out, season_out)
            total = part if total is None else ops.add(total, part)
        level = ops.broadcast_to(self.level(x), (x.shape[0], spec.horizon, N_TARGETS))
        return ops.add(level, self.head(total))
