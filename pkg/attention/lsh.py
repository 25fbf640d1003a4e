"""LSH 어텐션 (공유 QK, 다중 라운드 해시).

각 라운드마다
  1. 무작위 회전 R [d × n_buckets/2] 로 h(x) = argmax([xR ; −xR]) 버킷을 구한다.
  2. (버킷, 위치) 순으로 안정 정렬하고 chunk_len 길이 청크로 자른다.
  3. 각 청크는 자기 청크와 바로 앞 청크만 본다 (첫 청크는 앞 청크가 없다).
  4. 같은 버킷만 허용하고, 인과 모드면 미래를 막고, 자기 자신은 다른 대상이
     하나도 없을 때만 허용한다.
라운드 결과는 각 쿼리의 log-sum-exp로 정규화한 가중합으로 합친다.
키는 길이 정규화하고 쿼리는 그대로 쓴다.
"""

import math

import numpy as np

from attention.config import AttentionConfig, LshConfig
from attention.full import merge_heads, split_heads
from core import ops
from core.errors import ShapeError
from core.tensor import Tensor
from layers.base import Layer
from layers.linear import Linear

KEY_NORM_EPS = 1e-6
MASK_FILL = -1e9  # 차단 위치 점수 (log-sum-exp 계산용, 유한값)


def random_rotations(dim: int, config: LshConfig) -> np.ndarray:
    """라운드별 회전 행렬 [n_rounds, d, n_buckets/2]."""
    rng = np.random.default_rng(config.seed)
    return rng.standard_normal((config.n_rounds, dim, config.n_buckets // 2))


def lsh_hash(vectors, config: LshConfig) -> np.ndarray:
    """vectors [..., L, d] → 버킷 id [..., n_rounds, L] (0 ≤ id < n_buckets)."""
    x = vectors.data if isinstance(vectors, Tensor) else np.asarray(vectors, dtype=np.float64)
    rot = random_rotations(x.shape[-1], config)
    projected = np.einsum("...ld,rdb->...rlb", x, rot)
    return np.argmax(np.concatenate([projected, -projected], axis=-1), axis=-1)


def _normalize_keys(qk: Tensor) -> Tensor:
    norm = ops.sqrt(ops.shift(ops.sum(ops.square(qk), axis=-1, keepdims=True), KEY_NORM_EPS))
    return ops.div(qk, norm)


def _chunk(x: Tensor, n_chunks: int, chunk_len: int) -> Tensor:
    """[B, L, d] 정렬 순서 텐서를 0으로 채워 [B, n, c, d] 로 자른다."""
    b, length, d = x.shape
    pad = n_chunks * chunk_len - length
    if pad:
        x = ops.concat([x, Tensor(np.zeros((b, pad, d)))], axis=1)
    return ops.reshape(x, (b, n_chunks, chunk_len, d))


def _with_previous(chunks: Tensor) -> Tensor:
    """[B, n, c, d] → [B, n, 2c, d]: 자기 청크 + 앞 청크 (첫 청크 앞은 0)."""
    b, n, c, d = chunks.shape
    blank = Tensor(np.zeros((b, 1, c, d)))
    prev = blank if n == 1 else ops.concat([blank, ops.getitem(chunks, (slice(None), slice(0, n - 1)))], axis=1)
    return ops.concat([chunks, prev], axis=2)


def _chunk_meta(values: np.ndarray, n_chunks: int, chunk_len: int, fill: int) -> tuple[np.ndarray, np.ndarray]:
    """정렬된 위치/버킷 [B, L] → 쿼리용 [B, n, c], 키용 [B, n, 2c]."""
    b, length = values.shape
    padded = np.full((b, n_chunks * chunk_len), fill, dtype=np.int64)
    padded[:, :length] = values
    own = padded.reshape(b, n_chunks, chunk_len)
    prev = np.concatenate([np.full((b, 1, chunk_len), fill, dtype=np.int64), own[:, :-1]], axis=1)
    return own, np.concatenate([own, prev], axis=2)


def allowed_pairs(q_pos: np.ndarray, k_pos: np.ndarray, q_bucket: np.ndarray,
                  k_bucket: np.ndarray, causal: bool) -> np.ndarray:
    """쿼리/키 메타데이터로 허용 마스크를 만든다 (True = 허용)."""
    qp, kp = q_pos[..., :, None], k_pos[..., None, :]
    valid = (kp >= 0) & (qp >= 0) & (q_bucket[..., :, None] == k_bucket[..., None, :])
    if causal:
        valid &= kp <= qp
    is_self = kp == qp
    others = valid & ~is_self
    has_other = others.any(axis=-1, keepdims=True)
    allowed = np.where(has_other, others, valid & is_self)
    # 채움용 쿼리 행은 결과를 버리므로 첫 칸만 열어 둔다
    dead = ~allowed.any(axis=-1)
    allowed[..., 0] |= dead
    return allowed


def _one_round(qk: Tensor, keys: Tensor, v: Tensor, buckets: np.ndarray,
               config: LshConfig, causal: bool) -> tuple[Tensor, Tensor]:
    b, length, d = qk.shape
    c = config.chunk_len
    n = math.ceil(length / c)
    positions = np.broadcast_to(np.arange(length), (b, length))
    order = np.argsort(buckets * length + positions, axis=-1, kind="stable")
    undo = np.argsort(order, axis=-1)

    def sort(x: Tensor) -> Tensor:
        idx = np.broadcast_to(order[..., None], x.shape).copy()
        return ops.gather(x, idx, axis=1)

    q_chunks = _chunk(sort(qk), n, c)
    k_chunks = _with_previous(_chunk(sort(keys), n, c))
    v_chunks = _with_previous(_chunk(sort(v), n, c))

    q_pos, k_pos = _chunk_meta(np.take_along_axis(positions, order, -1), n, c, fill=-1)
    q_bkt, k_bkt = _chunk_meta(np.take_along_axis(buckets, order, -1), n, c, fill=-1)
    blocked = ~allowed_pairs(q_pos, k_pos, q_bkt, k_bkt, causal)

    scores = ops.scale(ops.matmul(q_chunks, ops.swapaxes(k_chunks, -1, -2)), 1.0 / math.sqrt(d))
    out = ops.matmul(ops.softmax(scores, -1, blocked), v_chunks)
    lse = ops.logsumexp(ops.where(~blocked, scores, MASK_FILL), axis=-1)

    out = ops.getitem(ops.reshape(out, (b, n * c, v.shape[-1])), (slice(None), slice(0, length)))
    lse = ops.getitem(ops.reshape(lse, (b, n * c)), (slice(None), slice(0, length)))
    out = ops.gather(out, np.broadcast_to(undo[..., None], out.shape).copy(), axis=1)
    lse = ops.gather(lse, undo, axis=1)
    return out, lse


def lsh_attend(qk: Tensor, v: Tensor, config: LshConfig, causal: bool = False) -> Tensor:
    """qk [B, L, d], v [B, L, d_v] → [B, L, d_v]."""
    if qk.ndim != 3 or v.ndim != 3 or qk.shape[:2] != v.shape[:2]:
        raise ShapeError(f"lsh_attend: qk {qk.shape}, v {v.shape} 는 [B, L, d] 형태여야 합니다")
    buckets = lsh_hash(qk, config)  # [B, R, L]
    keys = _normalize_keys(qk)
    outs, lses = [], []
    for r in range(config.n_rounds):
        out, lse = _one_round(qk, keys, v, buckets[:, r], config, causal)
        outs.append(out)
        lses.append(lse)
    if config.n_rounds == 1:
        return outs[0]

    b, length = qk.shape[:2]
    stacked = ops.concat([ops.reshape(x, (b, 1, length)) for x in lses], axis=1)
    weights = ops.softmax(stacked, axis=1)
    total = None
    for r, out in enumerate(outs):
        w = ops.reshape(ops.getitem(weights, (slice(None), r)), (b, length, 1))
        term = ops.mul(out, w)
        total = term if total is None else ops.add(total, term)
    return total


def dense_shared_qk_attention(qk: np.ndarray, v: np.ndarray, causal: bool = False) -> np.ndarray:
    """버킷·청크 없이 같은 마스크 규칙을 적용한 공유 QK 전체 어텐션 (검증 기준값).

    모든 쿼리가 한 버킷, chunk_len ≥ L 이면 lsh_attend 결과와 같아야 한다.
    """
    qk, v = np.asarray(qk, dtype=np.float64), np.asarray(v, dtype=np.float64)
    keys = qk / np.sqrt(np.sum(qk ** 2, axis=-1, keepdims=True) + KEY_NORM_EPS)
    scores = qk @ np.swapaxes(keys, -1, -2) / math.sqrt(qk.shape[-1])
    pos = np.broadcast_to(np.arange(qk.shape[-2]), qk.shape[:-1])
    same = np.zeros(qk.shape[:-1], dtype=np.int64)
    allowed = allowed_pairs(pos, pos, same, same, causal)
    z = np.where(allowed, scores, -np.inf)
    w = np.exp(z - z.max(axis=-1, keepdims=True))
    return (w / w.sum(axis=-1, keepdims=True)) @ v


class LSHSelfAttention(Layer):
    """공유 QK 투영을 쓰는 다중 헤드 LSH 자기 어텐션."""

    def __init__(self, config: AttentionConfig, lsh: LshConfig, rng: np.random.Generator):
        d = config.d_model
        self.config = config
        self.lsh = lsh
        self.qk_proj = Linear(d, d, rng)
        self.v_proj = Linear(d, d, rng)
        self.out_proj = Linear(d, d, rng)

    def forward(self, x: Tensor, causal: bool | None = None) -> Tensor:
        return lsh_attention(x, self, causal)


def lsh_attention(x: Tensor, params: LSHSelfAttention, causal: bool | None = None) -> Tensor:
    """x [B, L, d_model] → [B, L, d_model]. 헤드는 배치 축으로 펼쳐 해시한다."""
    causal = params.config.causal if causal is None else causal
    h = params.config.n_heads
    b, length, d = x.shape
    qk = split_heads(params.qk_proj(x), h)
    v = split_heads(params.v_proj(x), h)
    dk = d // h
    attended = lsh_attend(ops.reshape(qk, (b * h, length, dk)), ops.reshape(v, (b * h, length, dk)),
                          params.lsh, causal)
    return params.out_proj(merge_heads(ops.reshape(attended, (b, h, length, dk))))
