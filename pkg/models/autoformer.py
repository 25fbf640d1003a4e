"""Autoformer: 분해 구조 + 자기상관 어텐션.

하위 층 사이마다 series_decompose로 추세를 떼어 내고, 디코더에서는 떼어 낸
추세를 투영해 누적 추세에 더한다. 최종 예측 = 누적 추세 + 계절 성분 투영.
"""

import numpy as np

from attention.config import AttentionConfig
from attention.auto_correlation import AutoCorrelationLayer
from core import ops
from core.tensor import Tensor
from layers.base import Layer
from layers.embedding import DataEmbedding
from layers.feedforward import FeedForward
from layers.linear import Linear
from layers.norm import LayerNorm
from models.base import N_TARGETS, ForecastModel, ModelKind, ModelSpec, last_steps
from models.decomposition import series_decompose
from pipeline.features import TIME_FEATURE_DIMS


class AutoformerEncoderLayer(Layer):
    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        config = AttentionConfig(d_model=spec.d_model, n_heads=spec.n_heads)
        self.correlation = AutoCorrelationLayer(config, rng, spec.auto_correlation)
        self.ffn = FeedForward(spec.d_model, spec.d_ff, rng, spec.activation)
        self.kernel = spec.moving_avg

    def forward(self, x: Tensor) -> Tensor:
        x, _ = series_decompose(ops.add(x, self.correlation(x, x)), self.kernel)
        x, _ = series_decompose(ops.add(x, self.ffn(x)), self.kernel)
        return x


class AutoformerDecoderLayer(Layer):
    """(계절 출력, 이 층에서 떼어 낸 추세의 목표 공간 투영)을 반환한다."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        config = AttentionConfig(d_model=spec.d_model, n_heads=spec.n_heads)
        self.self_correlation = AutoCorrelationLayer(config, rng, spec.auto_correlation)
        self.cross_correlation = AutoCorrelationLayer(config, rng, spec.auto_correlation)
        self.ffn = FeedForward(spec.d_model, spec.d_ff, rng, spec.activation)
        self.trend_projection = Linear(spec.d_model, N_TARGETS, rng)
        self.kernel = spec.moving_avg

    def forward(self, x: Tensor, memory: Tensor) -> tuple[Tensor, Tensor]:
        x, trend1 = series_decompose(ops.add(x, self.self_correlation(x, x)), self.kernel)
        x, trend2 = series_decompose(ops.add(x, self.cross_correlation(x, memory)), self.kernel)
        x, trend3 = series_decompose(ops.add(x, self.ffn(x)), self.kernel)
        residual = ops.add(ops.add(trend1, trend2), trend3)
        return x, self.trend_projection(residual)


class Autoformer(ForecastModel):
    kind = ModelKind.AUTOFORMER

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        super().__init__(spec)
        self.enc_embedding = DataEmbedding(spec.n_features, spec.d_model, rng)
        self.dec_embedding = DataEmbedding(spec.n_features, spec.d_model, rng)
        self.encoder = [AutoformerEncoderLayer(spec, rng) for _ in range(spec.n_encoder_layers)]
        self.encoder_norm = LayerNorm(spec.d_model)
        self.decoder = [AutoformerDecoderLayer(spec, rng) for _ in range(spec.n_decoder_layers)]
        self.decoder_norm = LayerNorm(spec.d_model)
        self.projection = Linear(spec.d_model, N_TARGETS, rng)

    def _decoder_inputs(self, x: Tensor, future_time: Tensor | None) -> tuple[Tensor, Tensor]:
        """계절 입력 [B, label+H, m] 과 목표 채널 초기 추세 [B, label+H, 1]."""
        spec = self.spec
        b, length, m = x.shape
        seasonal, trend = series_decompose(x, spec.moving_avg)
        t = spec.target_index
        target_trend = ops.getitem(trend, (slice(None), slice(None), slice(t, t + 1)))
        mean = ops.mean(ops.getitem(x, (slice(None), slice(None), slice(t, t + 1))), axis=1, keepdims=True)
        trend_future = ops.broadcast_to(mean, (b, spec.horizon, 1))

        blank = Tensor(np.zeros((b, spec.horizon, m - TIME_FEATURE_DIMS)))
        if future_time is None:
            future_time = Tensor(np.zeros((b, spec.horizon, TIME_FEATURE_DIMS)))
        seasonal_future = ops.concat([blank, future_time], axis=2)
        if spec.label_len == 0:
            return seasonal_future, trend_future
        window = (slice(None), slice(length - spec.label_len, None))
        seasonal_in = ops.concat([ops.getitem(seasonal, window), seasonal_future], axis=1)
        trend_in = ops.concat([ops.getitem(target_trend, window), trend_future], axis=1)
        return seasonal_in, trend_in

    def predict_batch(self, x: Tensor, future_time: Tensor | None) -> Tensor:
        memory = self.enc_embedding(x)
        for i, layer in enumerate(self.encoder):
            memory = self.check_finite(f"encoder.{i}", layer(memory))
        memory = self.encoder_norm(memory)

        seasonal_in, trend = self._decoder_inputs(x, future_time)
        h = self.dec_embedding(seasonal_in)
        for i, layer in enumerate(self.decoder):
            h, residual_trend = layer(h, memory)
            h = self.check_finite(f"decoder.{i}", h)
            trend = ops.add(trend, residual_trend)
        out = ops.add(trend, self.projection(self.decoder_norm(h)))
        return last_steps(out, self.spec.horizon)
