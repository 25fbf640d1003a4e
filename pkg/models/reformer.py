"""Reformer: LSH 자기 어텐션을 F로, FFN을 G로 쓰는 가역 블록 스택.

임베딩을 복제해 (x1, x2) 쌍을 만들고 스택 출력은 평균으로 합친다.
기본은 인코더 단독 + 시간축 선형 예측 헤드이며, decoder 옵션을 켜면
label_len 인코더 상태 + H 자리표시자를 가역 인과 LSH 디코더로 처리한다.
"""

import numpy as np

from attention.config import AttentionConfig
from attention.lsh import LSHSelfAttention
from core import ops
from core.tensor import Tensor
from layers.base import Layer
from layers.embedding import DataEmbedding, positional_encoding
from layers.feedforward import FeedForward
from layers.linear import Linear
from layers.norm import LayerNorm
from models.base import N_TARGETS, ForecastModel, ModelKind, ModelSpec, last_steps
from models.reversible import ActivationMeter, RevBlock, reversible_stack
from pipeline.features import TIME_FEATURE_DIMS


class PreNorm(Layer):
    """LN → 하위 레이어. 잔차 경로 밖에서 정규화해 가역성을 유지한다."""

    def __init__(self, d_model: int, inner: Layer):
        self.norm = LayerNorm(d_model)
        self.inner = inner

    def forward(self, x: Tensor) -> Tensor:
        return self.inner(self.norm(x))


class CausalLSH(Layer):
    def __init__(self, attention: LSHSelfAttention):
        self.attention = attention

    def forward(self, x: Tensor) -> Tensor:
        return self.attention(x, causal=True)


def _rev_block(spec: ModelSpec, rng: np.random.Generator, causal: bool) -> RevBlock:
    config = AttentionConfig(d_model=spec.d_model, n_heads=spec.n_heads, causal=causal)
    attention = LSHSelfAttention(config, spec.reformer.lsh, rng)
    f = PreNorm(spec.d_model, CausalLSH(attention) if causal else attention)
    g = PreNorm(spec.d_model, FeedForward(spec.d_model, spec.d_ff, rng, spec.activation))
    return RevBlock(f, g)


class Reformer(ForecastModel):
    kind = ModelKind.REFORMER

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        super().__init__(spec)
        self.embedding = DataEmbedding(spec.n_features, spec.d_model, rng)
        self.encoder = [_rev_block(spec, rng, causal=False) for _ in range(spec.n_encoder_layers)]
        self.norm = LayerNorm(spec.d_model)
        if spec.reformer.decoder:
            self.decoder = [_rev_block(spec, rng, causal=True) for _ in range(spec.n_decoder_layers)]
            self.decoder_norm = LayerNorm(spec.d_model)
            self.time_embedding = Linear(TIME_FEATURE_DIMS, spec.d_model, rng)
        else:
            self.time_head = Linear(spec.lookback, spec.horizon, rng)
        self.projection = Linear(spec.d_model, N_TARGETS, rng)
        self.meter = ActivationMeter()

    def _run_stack(self, blocks: list[RevBlock], x: Tensor) -> Tensor:
        y1, y2 = reversible_stack(blocks, x, x, self.meter)
        return ops.scale(ops.add(y1, y2), 0.5)

    def predict_batch(self, x: Tensor, future_time: Tensor | None) -> Tensor:
        spec = self.spec
        h = self.norm(self._run_stack(self.encoder, self.embedding(x)))
        h = self.check_finite("encoder", h)
        if not spec.reformer.decoder:
            # [B, L, d] → [B, d, L] → 시간축 투영 → [B, H, d]
            h = ops.swapaxes(self.time_head(ops.swapaxes(h, 1, 2)), 1, 2)
            return self.projection(h)

        b = x.shape[0]
        if future_time is None:
            placeholders = Tensor(np.zeros((b, spec.horizon, spec.d_model)))
        else:
            placeholders = self.time_embedding(future_time)
        if spec.label_len:
            history = ops.getitem(h, (slice(None), slice(spec.lookback - spec.label_len, None)))
            dec_in = ops.concat([history, placeholders], axis=1)
        else:
            dec_in = placeholders
        pe = positional_encoding(dec_in.shape[1], spec.d_model)
        dec_in = ops.add(dec_in, ops.reshape(pe, (1,) + pe.shape))
        out = self.decoder_norm(self._run_stack(self.decoder, dec_in))
        out = self.check_finite("decoder", out)
        return self.projection(last_steps(out, spec.horizon))
