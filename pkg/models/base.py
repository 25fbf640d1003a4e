"""예측 모델 공통 인터페이스와 ModelSpec.

모든 모델은 입력 윈도우 [B, L_in, m] 를 받아 한 번의 순전파로
[B, H, 1] 예측을 낸다 (자기회귀 루프 없음).
"""

import logging
from abc import abstractmethod
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from attention.config import AutoCorrelationConfig, EtsAttentionConfig, LshConfig, ProbSparseConfig
from core import ops
from core.errors import NumericalError, ShapeError
from core.tensor import Tensor, no_grad
from layers.base import Layer
from pipeline.features import TIME_FEATURE_DIMS

logger = logging.getLogger(__name__)

HORIZONS = (96, 192, 336, 720)
N_TARGETS = 1


class ModelKind(str, Enum):
    VANILLA = "vanilla"
    INFORMER = "informer"
    AUTOFORMER = "autoformer"
    REFORMER = "reformer"
    ETSFORMER = "etsformer"
    LSTM = "lstm"
    CNN = "cnn"

    @property
    def is_transformer(self) -> bool:
        return self not in (ModelKind.LSTM, ModelKind.CNN)


class LstmPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    units: int = Field(default=64, gt=0)
    n_layers: int = Field(default=2, gt=0)


class CnnPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    channels: tuple[int, ...] = (32, 64)
    kernel_size: int = Field(default=3, gt=0)

    @field_validator("channels")
    @classmethod
    def _positive(cls, v):
        if not v or any(c <= 0 for c in v):
            raise ValueError(f"channels는 양수 목록이어야 합니다: {v}")
        return v


class ReformerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    lsh: LshConfig = LshConfig()
    decoder: bool = False  # True면 가역 LSH 디코더 스택을 추가로 쓴다


class ModelSpec(BaseModel):
    """모델 종류와 크기, 종류별 하위 설정."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ModelKind
    d_model: int = Field(default=64, gt=0)
    n_heads: int = Field(default=4, gt=0)
    n_encoder_layers: int = Field(default=2, gt=0)
    n_decoder_layers: int = Field(default=1, gt=0)
    d_ff: int = Field(default=128, gt=0)
    lookback: int = Field(default=96, ge=1)
    label_len: int = Field(default=48, ge=0)
    horizon: int = Field(default=96, ge=1)
    n_features: int = Field(default=12, ge=1)
    activation: str = "gelu"

    prob_sparse: ProbSparseConfig = ProbSparseConfig()
    reformer: ReformerConfig = ReformerConfig()
    auto_correlation: AutoCorrelationConfig = AutoCorrelationConfig()
    moving_avg: int = Field(default=25, ge=1)
    ets: EtsAttentionConfig = EtsAttentionConfig()
    lstm: LstmPlan = LstmPlan()
    cnn: CnnPlan = CnnPlan()

    allow_custom_horizon: bool = False  # 테스트용 소형 모델에서만 사용

    @model_validator(mode="after")
    def _check(self):
        problems = []
        if self.horizon not in HORIZONS and not self.allow_custom_horizon:
            problems.append(f"horizon {self.horizon} 은 {HORIZONS} 중 하나여야 합니다")
        if self.label_len > self.lookback:
            problems.append(f"label_len({self.label_len}) > lookback({self.lookback})")
        if self.d_model % self.n_heads:
            problems.append(f"d_model({self.d_model})이 n_heads({self.n_heads})로 나누어떨어지지 않습니다")
        if self.kind.is_transformer and self.d_model % 2:
            problems.append(f"위치 인코딩을 위해 d_model({self.d_model})은 짝수여야 합니다")
        if self.moving_avg % 2 == 0:
            problems.append(f"moving_avg({self.moving_avg})는 홀수여야 합니다")
        if self.kind is ModelKind.ETSFORMER and self.ets.top_k_freq > self.lookback // 2:
            problems.append(f"top_k_freq({self.ets.top_k_freq}) > lookback/2")
        if self.activation not in ("relu", "gelu"):
            problems.append(f"지원하지 않는 활성 함수: {self.activation}")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def target_index(self) -> int:
        """입력 열 배치: [관측 피처 | 목표(지연) | 시간 피처 4개]."""
        return self.n_features - TIME_FEATURE_DIMS - 1


class ForecastModel(Layer):
    """입력 윈도우 → H 스텝 예측."""

    kind: ModelKind

    def __init__(self, spec: ModelSpec):
        if spec.kind is not self.kind:
            raise ValueError(f"{type(self).__name__}에 {spec.kind.value} spec이 전달되었습니다")
        self.spec = spec

    def forward(self, x: Tensor, future_time: Tensor | None = None) -> Tensor:
        """x [B, L_in, m] (또는 [L_in, m]) → [B, H, 1] (또는 [H, 1])."""
        unbatched = x.ndim == 2
        if unbatched:
            x = ops.reshape(x, (1,) + x.shape)
            if future_time is not None:
                future_time = ops.reshape(future_time, (1,) + future_time.shape)
        spec = self.spec
        if x.shape[1:] != (spec.lookback, spec.n_features):
            raise ShapeError(f"{self.kind.value}: 입력 {x.shape[1:]} != ({spec.lookback}, {spec.n_features})")
        if future_time is not None and future_time.shape[1:] != (spec.horizon, TIME_FEATURE_DIMS):
            raise ShapeError(f"{self.kind.value}: future_time {future_time.shape[1:]} 형태 오류")
        out = self.check_finite("output", self.predict_batch(x, future_time))
        return ops.reshape(out, out.shape[1:]) if unbatched else out

    @abstractmethod
    def predict_batch(self, x: Tensor, future_time: Tensor | None) -> Tensor:
        """배치 입력에 대한 실제 순전파."""

    def check_finite(self, name: str, t: Tensor) -> Tensor:
        if not np.all(np.isfinite(t.data)):
            raise NumericalError(f"[{self.kind.value}.{name}] 활성값에 NaN/Inf가 있습니다")
        return t

    def predict(self, x: np.ndarray, future_time: np.ndarray | None = None) -> np.ndarray:
        """기록 없이 추론한다."""
        with no_grad():
            ft = None if future_time is None else Tensor(future_time)
            return self.forward(Tensor(x), ft).numpy()


# ── 인코더-디코더 공용 도우미 ──────────────────────────


def decoder_input(x: Tensor, spec: ModelSpec, future_time: Tensor | None) -> Tensor:
    """label_len 구간 이력 ++ H개 자리표시자. 자리표시자의 시간 피처 열은 미래 시각으로 채운다."""
    b, _, m = x.shape
    blank = Tensor(np.zeros((b, spec.horizon, m - TIME_FEATURE_DIMS)))
    if future_time is None:
        future_time = Tensor(np.zeros((b, spec.horizon, TIME_FEATURE_DIMS)))
    placeholders = ops.concat([blank, future_time], axis=2)
    if spec.label_len == 0:
        return placeholders
    history = ops.getitem(x, (slice(None), slice(spec.lookback - spec.label_len, None)))
    return ops.concat([history, placeholders], axis=1)


def last_steps(x: Tensor, horizon: int) -> Tensor:
    """[B, T, d] 의 마지막 horizon 행."""
    return ops.getitem(x, (slice(None), slice(x.shape[1] - horizon, None)))
