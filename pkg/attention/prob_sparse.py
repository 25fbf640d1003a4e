"""ProbSparse 어텐션.

쿼리마다 희소성 척도 M(q) = max_j s_j − mean_j s_j 를 키 표본 위에서 계산하고
상위 u = ⌈c·ln L_Q⌉ 개 쿼리만 전체 어텐션을 수행한다. 나머지 쿼리 행은
V 평균(인과 모드에서는 누적 평균)으로 채운다.
"""

import math

import numpy as np

from attention.config import ProbSparseConfig
from core import ops
from core.errors import ShapeError
from core.tensor import Tensor


def sparsity_measurement(q, k_sample) -> float:
    """단일 쿼리 q [d_k] 와 키 표본 [S, d_k] 의 max − mean 점수."""
    q = q.data if isinstance(q, Tensor) else np.asarray(q, dtype=np.float64)
    k_sample = k_sample.data if isinstance(k_sample, Tensor) else np.asarray(k_sample, dtype=np.float64)
    scores = k_sample @ q / math.sqrt(q.shape[-1])
    return float(np.max(scores) - np.mean(scores))


def _sparsity_scores(q: np.ndarray, k: np.ndarray) -> np.ndarray:
    scores = np.matmul(q, np.swapaxes(k, -1, -2)) / math.sqrt(q.shape[-1])
    return scores.max(axis=-1) - scores.mean(axis=-1)


def key_sample(l_k: int, config: ProbSparseConfig) -> np.ndarray:
    """정렬된 키 표본 인덱스. 시드가 같으면 항상 같은 표본이다."""
    if config.full_key_sample:
        return np.arange(l_k)
    size = ProbSparseConfig.log_size(config.sampling_factor, l_k)
    rng = np.random.default_rng(config.seed)
    return np.sort(rng.choice(l_k, size=size, replace=False))


def select_queries(q: np.ndarray, k: np.ndarray, config: ProbSparseConfig) -> np.ndarray:
    """M 상위 u개 쿼리 위치 [..., u] (위치 오름차순). 동점은 앞 위치 우선."""
    sample = key_sample(k.shape[-2], config)
    scores = _sparsity_scores(q, k[..., sample, :])
    u = ProbSparseConfig.log_size(config.sampling_factor, q.shape[-2])
    top = np.argsort(-scores, axis=-1, kind="stable")[..., :u]
    return np.sort(top, axis=-1)


def _lazy_rows(v: Tensor, l_q: int, causal: bool) -> Tensor:
    """선택되지 않은 쿼리의 출력: 평균 V 또는 누적 평균 V."""
    lead = v.shape[:-2]
    if causal:
        counts = np.arange(1, v.shape[-2] + 1, dtype=np.float64).reshape((1,) * len(lead) + (-1, 1))
        return ops.div(ops.cumsum(v, -2), Tensor(counts))
    avg = ops.mean(v, axis=-2, keepdims=True)
    return ops.broadcast_to(avg, lead + (l_q, v.shape[-1]))


def prob_sparse_attention(q: Tensor, k: Tensor, v: Tensor, config: ProbSparseConfig,
                          causal: bool = False) -> Tensor:
    """Q [..., L_Q, d_k], K [..., L_K, d_k], V [..., L_K, d_v] → [..., L_Q, d_v]."""
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"prob_sparse: Q {q.shape}, K {k.shape}, V {v.shape} 차원 불일치")
    l_q, l_k, d_v = q.shape[-2], k.shape[-2], v.shape[-1]
    if causal and l_q != l_k:
        raise ShapeError(f"prob_sparse: 인과 모드는 L_Q == L_K 여야 합니다 ({l_q} vs {l_k})")

    top = select_queries(q.data, k.data, config)
    lead = q.shape[:-2]
    u = top.shape[-1]

    q_idx = np.broadcast_to(top[..., None], lead + (u, q.shape[-1])).copy()
    q_top = ops.gather(q, q_idx, axis=-2)
    scores = ops.scale(ops.matmul(q_top, ops.swapaxes(k, -1, -2)), 1.0 / math.sqrt(q.shape[-1]))
    mask = None
    if causal:
        # 선택된 쿼리 위치 t는 키 0..t만 본다
        mask = np.arange(l_k) > top[..., None]
    active = ops.matmul(ops.softmax(scores, -1, mask), v)

    out_idx = np.broadcast_to(top[..., None], lead + (u, d_v)).copy()
    placed = ops.scatter(active, out_idx, axis=-2, size=l_q)
    chosen = np.zeros(lead + (l_q, d_v), dtype=bool)
    np.put_along_axis(chosen, out_idx, True, axis=-2)
    return ops.where(chosen, placed, _lazy_rows(v, l_q, causal))


def prob_sparse_kernel(config: ProbSparseConfig):
    """MultiHeadAttention에 꽂을 수 있는 커널을 만든다."""

    def kernel(q: Tensor, k: Tensor, v: Tensor, causal: bool) -> Tensor:
        return prob_sparse_attention(q, k, v, config, causal)

    return kernel
