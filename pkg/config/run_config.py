"""실행 설정 문서 (JSON).

관측소 목록과 파일 경로, 모델 종류별 ModelSpec 덮어쓰기, 분할 방식,
계열별 학습 파라미터, 출력 위치와 전역 시드를 담는다. 알 수 없는 키는
오타로 보고 거부한다. 파일을 주지 않으면 번들 합성 관측소 하나로 돈다.
"""

import json
import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.stations import station_info
from models.base import HORIZONS, ModelKind, ModelSpec
from pipeline.cleaning import DEFAULT_MAX_GAP
from pipeline.splitting import SplitSpec
from training.trainer import TrainConfig

logger = logging.getLogger(__name__)

SYNTHETIC_STATION = "SYN-001"
SYNTHETIC_ROWS = 6000  # H=720 시험 윈도우가 나오는 최소 길이 이상


class SyntheticSource(BaseModel):
    """파일 대신 생성기로 만드는 관측소 자료."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rows: int = Field(default=SYNTHETIC_ROWS, ge=10)
    noise: float = Field(default=0.0, ge=0)
    start: str = "2010-01-01 00:00"
    sentinel_features: tuple[str, ...] = ()


class StationSource(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str = Field(min_length=1)
    path: str | None = None
    column_map: dict[str, str] = Field(default_factory=dict)
    use_catalog_boundaries: bool = False
    synthetic: SyntheticSource | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if self.path is None and self.synthetic is None:
            raise ValueError(f"[{self.id}] path 또는 synthetic 중 하나가 필요합니다")
        if self.path is not None and self.synthetic is not None:
            raise ValueError(f"[{self.id}] path와 synthetic은 함께 쓸 수 없습니다")
        if self.use_catalog_boundaries and station_info(self.id) is None:
            raise ValueError(f"[{self.id}] 카탈로그에 없는 관측소라 경계 시각을 쓸 수 없습니다")
        return self

    def split(self, base: SplitSpec) -> SplitSpec:
        if not self.use_catalog_boundaries:
            return base
        return base.model_copy(update={"boundaries": station_info(self.id).boundaries})


class FamilyTraining(BaseModel):
    """계열 기본값에 덮어쓸 학습 파라미터. 비워 두면 기본값을 쓴다."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float | None = Field(default=None, gt=0)
    epochs: int | None = Field(default=None, ge=0)
    batch_size: int | None = Field(default=None, ge=1)


class TrainingPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    transformer: FamilyTraining = FamilyTraining()
    baseline: FamilyTraining = FamilyTraining()


def _default_stations() -> list[StationSource]:
    return [StationSource(id=SYNTHETIC_STATION, synthetic=SyntheticSource())]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stations: list[StationSource] = Field(default_factory=_default_stations, min_length=1)
    kinds: list[ModelKind] = Field(default_factory=lambda: list(ModelKind), min_length=1)
    horizons: list[int] = Field(default_factory=lambda: list(HORIZONS), min_length=1)
    model_defaults: dict[str, Any] = Field(default_factory=dict)
    models: dict[ModelKind, dict[str, Any]] = Field(default_factory=dict)
    split: SplitSpec = SplitSpec()
    training: TrainingPlan = TrainingPlan()
    max_gap: int = Field(default=DEFAULT_MAX_GAP, ge=0)
    stride: int = Field(default=1, ge=1)
    out_dir: str | None = None
    seed: int = 42

    @model_validator(mode="after")
    def _check(self):
        ids = [s.id for s in self.stations]
        duplicated = sorted({i for i in ids if ids.count(i) > 1})
        if duplicated:
            raise ValueError(f"관측소 id가 중복되었습니다: {duplicated}")
        # 모든 (종류, H) 조합의 ModelSpec이 만들어지는지 미리 확인한다
        for kind in self.kinds:
            for horizon in self.horizons:
                self.model_spec(kind, horizon)
        return self

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            logger.info("설정 파일 없음: 번들 합성 관측소(%s) 사용", SYNTHETIC_STATION)
            return cls()
        path = Path(path)
        return cls.model_validate(json.loads(path.read_text(encoding="utf-8")))

    def with_overrides(self, seed: int | None = None, out_dir: str | None = None,
                       station: str | None = None, kind: str | None = None,
                       horizon: int | None = None) -> "RunConfig":
        """명령행 값으로 스칼라 설정을 덮어쓴 새 설정. 결과도 다시 검증한다."""
        data = self.model_dump()
        if seed is not None:
            data["seed"] = seed
        if out_dir is not None:
            data["out_dir"] = out_dir
        if station is not None:
            chosen = [s for s in data["stations"] if s["id"] == station]
            if not chosen:
                raise ValueError(f"설정에 없는 관측소: {station} (가능: {[s.id for s in self.stations]})")
            data["stations"] = chosen
        if kind is not None:
            data["kinds"] = [ModelKind(kind)]
        if horizon is not None:
            data["horizons"] = [horizon]
        return RunConfig.model_validate(data)

    def station(self, station_id: str) -> StationSource:
        for source in self.stations:
            if source.id == station_id:
                return source
        raise KeyError(station_id)

    def model_spec(self, kind: ModelKind, horizon: int | None = None) -> ModelSpec:
        data = {**self.model_defaults, **self.models.get(kind, {}), "kind": kind}
        if horizon is not None:
            data["horizon"] = horizon
        return ModelSpec.model_validate(data)

    def train_config(self, kind: ModelKind) -> TrainConfig:
        family = self.training.transformer if kind.is_transformer else self.training.baseline
        return TrainConfig.for_kind(kind, seed=self.seed, **family.model_dump(exclude_none=True))

    def missing_paths(self) -> list[str]:
        return [f"{s.id}: {s.path}" for s in self.stations if s.path is not None and not Path(s.path).exists()]
