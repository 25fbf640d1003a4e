"""Vanilla Transformer 인코더-디코더.

디코더 입력은 label_len 이력 + H개 자리표시자이며 한 번의 순전파로
마지막 H 행을 예측한다. Informer는 같은 골격에 ProbSparse 커널만 바꿔 쓴다.
"""

import numpy as np

from attention.config import AttentionConfig
from attention.full import AttentionKernel, MultiHeadAttention, full_kernel
from core import ops
from core.tensor import Tensor
from layers.base import Layer
from layers.embedding import DataEmbedding
from layers.feedforward import FeedForward
from layers.linear import Linear
from layers.norm import LayerNorm
from models.base import N_TARGETS, ForecastModel, ModelKind, ModelSpec, decoder_input, last_steps


class EncoderLayer(Layer):
    """x = LN(x + Attn(x, x)); x = LN(x + FFN(x))."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator, kernel: AttentionKernel):
        config = AttentionConfig(d_model=spec.d_model, n_heads=spec.n_heads)
        self.attention = MultiHeadAttention(config, rng, kernel)
        self.norm1 = LayerNorm(spec.d_model)
        self.ffn = FeedForward(spec.d_model, spec.d_ff, rng, spec.activation)
        self.norm2 = LayerNorm(spec.d_model)

    def forward(self, x: Tensor) -> Tensor:
        x = self.norm1(ops.add(x, self.attention(x, x)))
        return self.norm2(ops.add(x, self.ffn(x)))


class DecoderLayer(Layer):
    """인과 자기 어텐션 → 인코더 교차 어텐션 → FFN (각각 post-norm 잔차)."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator, self_kernel: AttentionKernel):
        self_cfg = AttentionConfig(d_model=spec.d_model, n_heads=spec.n_heads, causal=True)
        cross_cfg = AttentionConfig(d_model=spec.d_model, n_heads=spec.n_heads)
        self.self_attention = MultiHeadAttention(self_cfg, rng, self_kernel)
        self.norm1 = LayerNorm(spec.d_model)
        self.cross_attention = MultiHeadAttention(cross_cfg, rng, full_kernel)
        self.norm2 = LayerNorm(spec.d_model)
        self.ffn = FeedForward(spec.d_model, spec.d_ff, rng, spec.activation)
        self.norm3 = LayerNorm(spec.d_model)

    def forward(self, x: Tensor, memory: Tensor) -> Tensor:
        x = self.norm1(ops.add(x, self.self_attention(x, x)))
        x = self.norm2(ops.add(x, self.cross_attention(x, memory)))
        return self.norm3(ops.add(x, self.ffn(x)))


class VanillaTransformer(ForecastModel):
    kind = ModelKind.VANILLA

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        super().__init__(spec)
        kernel = self.attention_kernel()
        self.enc_embedding = DataEmbedding(spec.n_features, spec.d_model, rng)
        self.dec_embedding = DataEmbedding(spec.n_features, spec.d_model, rng)
        self.encoder = [EncoderLayer(spec, rng, kernel) for _ in range(spec.n_encoder_layers)]
        self.decoder = [DecoderLayer(spec, rng, kernel) for _ in range(spec.n_decoder_layers)]
        self.projection = Linear(spec.d_model, N_TARGETS, rng)

    def attention_kernel(self) -> AttentionKernel:
        return full_kernel

    def predict_batch(self, x: Tensor, future_time: Tensor | None) -> Tensor:
        memory = self.enc_embedding(x)
        for i, layer in enumerate(self.encoder):
            memory = self.check_finite(f"encoder.{i}", layer(memory))
        h = self.dec_embedding(decoder_input(x, self.spec, future_time))
        for i, layer in enumerate(self.decoder):
            h = self.check_finite(f"decoder.{i}", layer(h, memory))
        return self.projection(last_steps(h, self.spec.horizon))
