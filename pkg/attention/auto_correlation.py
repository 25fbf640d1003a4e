"""자기상관 어텐션.

R_QK(τ) = (1/L)·Σ_t Q_t·K_{t−τ} 를 FFT로 구해 채널 평균을 내고, 상위 k개 지연의
R 값을 softmax해 V를 τ만큼 순환 이동한 것들을 가중합한다.
이동은 Roll(V, τ)_t = V_{(t+τ) mod L} 로 정의한다.
"""

import math

import numpy as np

from attention.config import AttentionConfig, AutoCorrelationConfig
from attention.full import merge_heads, split_heads
from core import ops
from core.errors import ShapeError
from core.tensor import Tensor
from layers.base import Layer
from layers.linear import Linear

TIE_DECIMALS = 9  # 상대 1e-9 이내 R 값은 동점으로 보고 작은 τ를 고른다


def lag_correlation(q: Tensor, k: Tensor) -> Tensor:
    """Q, K [..., L, d] → 채널 평균 R [..., L]."""
    if q.shape != k.shape:
        raise ShapeError(f"lag_correlation: {q.shape} vs {k.shape}")
    return ops.mean(ops.circular_correlation(q, k, axis=-2), axis=-1)


def n_delays(length: int, config: AutoCorrelationConfig) -> int:
    k = max(1, math.floor(config.c_factor * math.log(length)))
    return min(k, length - 1 if config.exclude_zero_lag else length)


def top_delays(corr: np.ndarray, k: int, exclude_zero_lag: bool = False) -> np.ndarray:
    """R [..., L] 에서 상위 k개 τ [..., k]. 동점이면 작은 τ."""
    scale = np.max(np.abs(corr), axis=-1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    key = np.round(corr / scale, TIE_DECIMALS)
    if exclude_zero_lag:
        key = key.copy()
        key[..., 0] = -np.inf
    return np.argsort(-key, axis=-1, kind="stable")[..., :k]


def select_delays(q: Tensor, k: Tensor, config: AutoCorrelationConfig) -> np.ndarray:
    length = q.shape[-2]
    corr = lag_correlation(q, k).data
    return top_delays(corr, n_delays(length, config), config.exclude_zero_lag)


def roll_indices(delays: np.ndarray, length: int, width: int) -> np.ndarray:
    """τ [...] → V 선택 인덱스 [..., L, width]: (t + τ) mod L."""
    idx = (np.arange(length) + delays[..., None]) % length
    return np.broadcast_to(idx[..., None], delays.shape + (length, width)).copy()


def auto_correlation_attention(q: Tensor, k: Tensor, v: Tensor,
                               config: AutoCorrelationConfig = AutoCorrelationConfig()) -> Tensor:
    """Q, K, V [..., L, d] → [..., L, d_v]."""
    if q.shape != k.shape or q.shape[-2] != v.shape[-2]:
        raise ShapeError(f"auto_correlation: Q {q.shape}, K {k.shape}, V {v.shape} 차원 불일치")
    length = q.shape[-2]
    if length < 2:
        raise ShapeError("auto_correlation: 길이가 2 이상이어야 합니다")
    corr = lag_correlation(q, k)
    delays = top_delays(corr.data, n_delays(length, config), config.exclude_zero_lag)
    weights = ops.softmax(ops.gather(corr, delays, axis=-1), axis=-1)

    lead = v.shape[:-2]
    out = None
    for i in range(delays.shape[-1]):
        rolled = ops.gather(v, roll_indices(delays[..., i], length, v.shape[-1]), axis=-2)
        w = ops.reshape(ops.getitem(weights, (..., slice(i, i + 1))), lead + (1, 1))
        term = ops.mul(rolled, w)
        out = term if out is None else ops.add(out, term)
    return out


def align_kv(x: Tensor, length: int) -> Tensor:
    """교차 자기상관용: 키/값 길이를 쿼리 길이에 맞춘다 (잘라내거나 0을 덧붙임)."""
    have = x.shape[-2]
    if have == length:
        return x
    if have > length:
        return ops.getitem(x, (..., slice(0, length), slice(None)))
    pad = Tensor(np.zeros(x.shape[:-2] + (length - have, x.shape[-1])))
    return ops.concat([x, pad], axis=-2)


class AutoCorrelationLayer(Layer):
    """헤드별 투영 후 자기상관 어텐션을 적용한다."""

    def __init__(self, config: AttentionConfig, rng: np.random.Generator,
                 corr: AutoCorrelationConfig = AutoCorrelationConfig()):
        d = config.d_model
        self.config = config
        self.corr = corr
        self.q_proj = Linear(d, d, rng)
        self.k_proj = Linear(d, d, rng)
        self.v_proj = Linear(d, d, rng)
        self.out_proj = Linear(d, d, rng)

    def forward(self, x_q: Tensor, x_kv: Tensor) -> Tensor:
        h = self.config.n_heads
        length = x_q.shape[1]
        q = split_heads(self.q_proj(x_q), h)
        k = split_heads(self.k_proj(align_kv(x_kv, length)), h)
        v = split_heads(self.v_proj(align_kv(x_kv, length)), h)
        return self.out_proj(merge_heads(auto_correlation_attention(q, k, v, self.corr)))
