"""슬라이딩 윈도우 표본.

입력 열 배치: [관측 피처 k개 | 목표(과거 토양온도) | 시간 피처 4개].
윈도우는 분할 구간 안에서만 만들고 결측 셀이 하나라도 있으면 건너뛴다.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from pipeline.features import time_feature_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowSample:
    input: np.ndarray        # [L_in × m]
    target: np.ndarray       # [H] 정규화된 토양온도
    origin_index: int        # 첫 예측 시각의 행 인덱스
    future_time: np.ndarray  # [H × 4]


class WindowSet:
    """시작 위치 목록만 들고 있다가 요청 시 배열을 잘라 만든다."""

    def __init__(self, inputs: np.ndarray, target: np.ndarray, time: np.ndarray,
                 starts: np.ndarray, lookback: int, horizon: int):
        self.inputs = inputs
        self.target = target
        self.time = time
        self.starts = np.asarray(starts, dtype=np.int64)
        self.lookback = lookback
        self.horizon = horizon

    def __len__(self) -> int:
        return len(self.starts)

    def __getitem__(self, i: int) -> WindowSample:
        s = int(self.starts[i])
        origin = s + self.lookback
        return WindowSample(
            input=self.inputs[s:origin].copy(),
            target=self.target[origin:origin + self.horizon].copy(),
            origin_index=origin,
            future_time=self.time[origin:origin + self.horizon].copy(),
        )

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    def batch(self, indices) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x [B, L, m], y [B, H], future_time [B, H, 4])."""
        starts = self.starts[np.asarray(indices, dtype=np.int64)]
        src = starts[:, None] + np.arange(self.lookback)[None, :]
        dst = starts[:, None] + self.lookback + np.arange(self.horizon)[None, :]
        return self.inputs[src], self.target[dst], self.time[dst]

    def iter_batches(self, batch_size: int, rng: np.random.Generator | None = None):
        """rng가 있으면 섞은 순서로, 없으면 순서대로 배치를 낸다."""
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for i in range(0, len(order), batch_size):
            yield self.batch(order[i:i + batch_size])

    def subset(self, indices) -> "WindowSet":
        return WindowSet(self.inputs, self.target, self.time, self.starts[np.asarray(indices)],
                         self.lookback, self.horizon)


def valid_starts(missing_rows: np.ndarray, rows: tuple[int, int], lookback: int, horizon: int,
                 stride: int = 1) -> np.ndarray:
    """구간 안에서 결측 행을 포함하지 않는 윈도우 시작 위치."""
    start, stop = rows
    span = lookback + horizon
    if stop - start < span:
        return np.zeros(0, dtype=np.int64)
    bad = np.concatenate([[0], np.cumsum(missing_rows[start:stop].astype(np.int64))])
    first = np.arange(0, stop - start - span + 1, stride)
    clean = bad[first + span] - bad[first] == 0
    return first[clean] + start


def make_windows(values: np.ndarray, timestamps: pd.DatetimeIndex, rows: tuple[int, int],
                 lookback: int, horizon: int, stride: int = 1, label: str = "") -> WindowSet:
    """values [T × (k+1)] 정규화 값(마지막 열이 목표)으로 구간 rows의 윈도우를 만든다."""
    if lookback < 1 or horizon < 1 or stride < 1:
        raise ValueError(f"lookback/horizon/stride는 1 이상이어야 합니다: {lookback}, {horizon}, {stride}")
    time = time_feature_matrix(timestamps)
    inputs = np.column_stack([values, time])
    missing_rows = np.isnan(values).any(axis=1)
    starts = valid_starts(missing_rows, rows, lookback, horizon, stride)
    if len(starts) == 0:
        logger.warning("%s 구간 %s 에서 만들 수 있는 윈도우가 없습니다 (L_in=%d, H=%d)", label, rows, lookback, horizon)
    return WindowSet(inputs, values[:, -1], time, starts, lookback, horizon)
