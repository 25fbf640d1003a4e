"""Scaled dot-product / multi-head 어텐션."""

import math
from typing import Callable

import numpy as np

from attention.config import AttentionConfig
from core import ops
from core.errors import ShapeError
from core.tensor import Tensor
from layers.base import Layer
from layers.linear import Linear

# 커널 공통 시그니처: (Q, K, V, causal) -> Tensor
AttentionKernel = Callable[[Tensor, Tensor, Tensor, bool], Tensor]


def causal_mask(l_q: int, l_k: int) -> np.ndarray:
    """True = 차단. 위치 t는 t 이하의 키만 본다."""
    return np.triu(np.ones((l_q, l_k), dtype=bool), k=1)


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """softmax(QKᵀ/√d_k)V. mask에서 True인 위치는 −∞ 취급이며 행 전체가 막히면 오류."""
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"attention: Q {q.shape}, K {k.shape}, V {v.shape} 차원 불일치")
    if mask is not None and np.shape(mask)[-2:] != (q.shape[-2], k.shape[-2]):
        raise ShapeError(f"attention: mask {np.shape(mask)} != ({q.shape[-2]}, {k.shape[-2]})")
    scores = ops.scale(ops.matmul(q, ops.swapaxes(k, -1, -2)), 1.0 / math.sqrt(q.shape[-1]))
    return ops.matmul(ops.softmax(scores, -1, mask), v)


def full_kernel(q: Tensor, k: Tensor, v: Tensor, causal: bool) -> Tensor:
    mask = causal_mask(q.shape[-2], k.shape[-2]) if causal else None
    return scaled_dot_attention(q, k, v, mask)


def split_heads(x: Tensor, n_heads: int) -> Tensor:
    """[B, L, d] → [B, H, L, d/H]."""
    b, length, d = x.shape
    return ops.transpose(ops.reshape(x, (b, length, n_heads, d // n_heads)), (0, 2, 1, 3))


def merge_heads(x: Tensor) -> Tensor:
    """[B, H, L, d_k] → [B, L, H·d_k]."""
    b, h, length, dk = x.shape
    return ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (b, length, h * dk))


class MultiHeadAttention(Layer):
    """헤드별 투영 → 커널 → 결합 → 출력 투영. 커널은 교체 가능하다."""

    def __init__(self, config: AttentionConfig, rng: np.random.Generator,
                 kernel: AttentionKernel = full_kernel):
        d = config.d_model
        self.config = config
        self.q_proj = Linear(d, d, rng)
        self.k_proj = Linear(d, d, rng)
        self.v_proj = Linear(d, d, rng)
        self.out_proj = Linear(d, d, rng)
        self.kernel = kernel

    def forward(self, x_q: Tensor, x_kv: Tensor, causal: bool | None = None) -> Tensor:
        return multi_head_attention(x_q, x_kv, self.config, self, causal)


def multi_head_attention(x_q: Tensor, x_kv: Tensor, config: AttentionConfig,
                         params: MultiHeadAttention, causal: bool | None = None) -> Tensor:
    """x_q [B, L_q, d], x_kv [B, L_k, d] (배치 없는 2차원 입력도 허용)."""
    unbatched = x_q.ndim == 2
    if unbatched:
        x_q = ops.reshape(x_q, (1,) + x_q.shape)
        x_kv = ops.reshape(x_kv, (1,) + x_kv.shape)
    if x_q.shape[-1] != config.d_model or x_kv.shape[-1] != config.d_model:
        raise ShapeError(f"multi_head_attention: 입력 {x_q.shape}, {x_kv.shape} 의 마지막 차원 != {config.d_model}")
    causal = config.causal if causal is None else causal
    h = config.n_heads
    q = split_heads(params.q_proj(x_q), h)
    k = split_heads(params.k_proj(x_kv), h)
    v = split_heads(params.v_proj(x_kv), h)
    out = params.out_proj(merge_heads(params.kernel(q, k, v, causal)))
    return ops.reshape(out, out.shape[1:]) if unbatched else out
