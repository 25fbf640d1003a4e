"""어텐션 커널 설정 모델."""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AttentionConfig(BaseModel):
    """d_model, n_heads, causal. d_k = d_model / n_heads."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    d_model: int = Field(gt=0)
    n_heads: int = Field(default=1, gt=0)
    causal: bool = False

    @model_validator(mode="after")
    def _divisible(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model({self.d_model})이 n_heads({self.n_heads})로 나누어떨어지지 않습니다")
        return self

    @property
    def d_k(self) -> int:
        return self.d_model // self.n_heads


class LshConfig(BaseModel):
    """무작위 회전 해시 파라미터."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_buckets: int = Field(default=8, ge=2)
    n_rounds: int = Field(default=2, ge=1)
    chunk_len: int = Field(default=24, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _even_buckets(self):
        if self.n_buckets % 2:
            raise ValueError(f"n_buckets는 짝수여야 합니다 ({self.n_buckets})")
        return self


class ProbSparseConfig(BaseModel):
    """표본 계수 c: u = ⌈c·ln L_Q⌉, 키 표본 크기 ⌈c·ln L_K⌉."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sampling_factor: float = Field(default=5.0, gt=0)
    seed: int = 0
    full_key_sample: bool = False  # 키 전체로 M을 계산 (검증용)

    @staticmethod
    def log_size(c: float, length: int) -> int:
        return min(length, max(1, math.ceil(c * math.log(length))))


class AutoCorrelationConfig(BaseModel):
    """k = max(1, ⌊c·ln L⌋) 개의 지연을 고른다."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    c_factor: float = Field(default=1.0, gt=0)
    exclude_zero_lag: bool = False


class EtsAttentionConfig(BaseModel):
    """평활 계수는 sigmoid 이전 값으로 저장한다."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    top_k_freq: int = Field(default=3, ge=1)
    period: int = Field(default=24, ge=1)

    @staticmethod
    def squash(raw: float) -> float:
        return 1.0 / (1.0 + math.exp(-raw))

    @property
    def smoothing(self) -> tuple[float, float, float]:
        return self.squash(self.alpha), self.squash(self.beta), self.squash(self.gamma)
