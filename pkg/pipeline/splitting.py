"""시간 순서 분할 (학습 → 검증 → 시험)."""

import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import DataError

MIN_ROWS = 10
FRACTION_TOLERANCE = 1e-9


class SplitSpec(BaseModel):
    """비율(기본 0.7/0.1/0.2) 또는 명시적 경계 시각."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    train_fraction: float = Field(default=0.7, ge=0, le=1)
    val_fraction: float = Field(default=0.1, ge=0, le=1)
    test_fraction: float = Field(default=0.2, ge=0, le=1)
    boundaries: tuple[datetime, datetime] | None = None

    @model_validator(mode="after")
    def _check(self):
        total = self.train_fraction + self.val_fraction + self.test_fraction
        if abs(total - 1.0) > FRACTION_TOLERANCE:
            raise ValueError(f"분할 비율의 합이 1이 아닙니다: {total}")
        if self.boundaries is not None and not self.boundaries[0] < self.boundaries[1]:
            raise ValueError(f"분할 경계 순서가 잘못되었습니다: {self.boundaries}")
        return self


@dataclass(frozen=True)
class SplitRanges:
    """각 구간은 [start, stop) 행 인덱스."""
    train: tuple[int, int]
    val: tuple[int, int]
    test: tuple[int, int]

    def sizes(self) -> tuple[int, int, int]:
        return tuple(stop - start for start, stop in (self.train, self.val, self.test))

    def part(self, name: str) -> tuple[int, int]:
        return getattr(self, name)


def _floor(x: float) -> int:
    return math.floor(x + FRACTION_TOLERANCE)


def chronological_split(length: int, spec: SplitSpec = SplitSpec(),
                        timestamps: pd.DatetimeIndex | None = None) -> SplitRanges:
    """⌊0.7T⌋ / ⌊0.1T⌋ / 나머지. 경계 시각이 있으면 시각 기준으로 자른다."""
    if length < MIN_ROWS:
        raise DataError(f"분할하려면 최소 {MIN_ROWS}행이 필요합니다 (T={length})")
    if spec.boundaries is not None:
        if timestamps is None or len(timestamps) != length:
            raise DataError("경계 시각 분할에는 행 수와 같은 길이의 timestamps가 필요합니다")
        ts = np.asarray(pd.DatetimeIndex(timestamps))
        cut1 = int(np.searchsorted(ts, np.datetime64(spec.boundaries[0]), side="left"))
        cut2 = int(np.searchsorted(ts, np.datetime64(spec.boundaries[1]), side="left"))
        if cut1 == 0 or cut2 <= cut1 or cut2 >= length:
            raise DataError(f"경계 {spec.boundaries} 가 자료 범위 {timestamps[0]} ~ {timestamps[-1]} 와 맞지 않습니다")
        return SplitRanges((0, cut1), (cut1, cut2), (cut2, length))
    n_train = _floor(spec.train_fraction * length)
    n_val = _floor(spec.val_fraction * length)
    return SplitRanges((0, n_train), (n_train, n_train + n_val), (n_train + n_val, length))
