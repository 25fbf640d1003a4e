"""학습 구간 통계와 z-score 정규화."""

import logging
from dataclasses import dataclass

import numpy as np

from config.stations import TARGET_NAME
from core.errors import DataError
from pipeline.loader import StationSeries
from pipeline.splitting import SplitRanges

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureStats:
    """열별 min/max/mean/std (std는 모집단 표준편차, ddof=0)."""
    station_id: str
    columns: tuple[str, ...]
    minimum: np.ndarray
    maximum: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    @property
    def scale(self) -> np.ndarray:
        """정규화 분모. 분산 0인 열은 1로 둔다."""
        return np.where(self.std > 0, self.std, 1.0)

    @property
    def target_mean(self) -> float:
        return float(self.mean[self.columns.index(TARGET_NAME)])

    @property
    def target_scale(self) -> float:
        return float(self.scale[self.columns.index(TARGET_NAME)])

    def to_dict(self) -> dict:
        return {
            "station_id": self.station_id,
            "columns": {
                name: {"min": float(self.minimum[i]), "max": float(self.maximum[i]),
                       "mean": float(self.mean[i]), "std": float(self.std[i])}
                for i, name in enumerate(self.columns)
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureStats":
        names = tuple(data["columns"])
        pick = lambda key: np.array([data["columns"][n][key] for n in names], dtype=np.float64)  # noqa: E731
        return cls(data["station_id"], names, pick("min"), pick("max"), pick("mean"), pick("std"))


def compute_stats(series: StationSeries, rows: tuple[int, int] | None = None) -> FeatureStats:
    """rows 구간(기본: 전체)의 결측 아닌 셀로 통계를 낸다."""
    start, stop = rows if rows is not None else (0, len(series))
    frame = series.frame().iloc[start:stop]
    if frame.empty or frame.dropna(how="all").empty:
        raise DataError(f"[{series.station_id}] 통계를 낼 행이 없습니다 ({start}:{stop})")
    empty = [c for c in frame.columns if frame[c].isna().all()]
    if empty:
        raise DataError(f"[{series.station_id}] 관측값이 하나도 없는 열: {empty}")
    std = frame.std(ddof=0).to_numpy()
    for name, s in zip(frame.columns, std):
        if s == 0:
            logger.warning("[%s] '%s' 분산 0: 정규화 때 std=1 사용", series.station_id, name)
    return FeatureStats(
        station_id=series.station_id,
        columns=tuple(frame.columns),
        minimum=frame.min().to_numpy(),
        maximum=frame.max().to_numpy(),
        mean=frame.mean().to_numpy(),
        std=std,
    )


def training_stats(series: StationSeries, ranges: SplitRanges) -> FeatureStats:
    return compute_stats(series, ranges.train)


def normalize(series: StationSeries, stats: FeatureStats) -> np.ndarray:
    """[T × (k+1)] z-score 값. 결측은 NaN 그대로."""
    if stats.station_id != series.station_id:
        raise DataError(f"다른 관측소 통계입니다: {stats.station_id} != {series.station_id}")
    if tuple(series.columns) != stats.columns:
        raise DataError(f"[{series.station_id}] 열 구성이 통계와 다릅니다: {series.columns} vs {list(stats.columns)}")
    return (series.values - stats.mean) / stats.scale


def denormalize_target(values: np.ndarray, stats: FeatureStats) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) * stats.target_scale + stats.target_mean
