"""FLUXNET 형식 CSV 적재.

논리 열 이름 → 파일 열 이름 매핑으로 읽어 들이고, 시각을 자동 판별
(YYYYMMDDHHMM 또는 ISO-8601)하며, 30분 자료는 1시간으로 집계하고,
빠진 시각은 결측 행으로 채워 1시간 격자를 강제한다.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from config.stations import FEATURE_NAMES, TARGET_NAME
from core.errors import DataError

logger = logging.getLogger(__name__)

# FLUXNET2015 FULLSET 시간 단위 변수 이름
FLUXNET_COLUMN_MAP = {
    "timestamp": "TIMESTAMP_START",
    "lw_rad": "LW_IN_F",
    "sw_rad": "SW_IN_F",
    "air_temp": "TA_F",
    "pressure": "PA_F",
    "wind": "WS_F",
    "precip": "P_F",
    "soil_moisture": "SWC_F_MDS_1",
    "soil_temp_5cm": "TS_F_MDS_1",
}

SUMMED_COLUMNS = ("precip",)  # 30분 → 1시간 집계 때 합산하는 변수
COMPACT_TIMESTAMP = "%Y%m%d%H%M"


@dataclass
class StationSeries:
    """관측소 한 곳의 1시간 간격 시계열. 결측 셀은 NaN + missing_mask."""
    station_id: str
    timestamps: pd.DatetimeIndex
    features: np.ndarray               # [T × k]
    target: np.ndarray                 # [T]
    feature_names: list[str] = field(default_factory=lambda: list(FEATURE_NAMES))
    dropped_features: list[str] = field(default_factory=list)

    def __post_init__(self):
        t = len(self.timestamps)
        if self.features.shape != (t, len(self.feature_names)) or self.target.shape != (t,):
            raise DataError(
                f"[{self.station_id}] 길이 불일치: timestamps {t}, features {self.features.shape}, "
                f"target {self.target.shape}, 피처 이름 {len(self.feature_names)}개"
            )

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def columns(self) -> list[str]:
        return list(self.feature_names) + [TARGET_NAME]

    @property
    def values(self) -> np.ndarray:
        """[T × (k+1)] 피처 + 목표."""
        return np.column_stack([self.features, self.target])

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.timestamps, columns=self.columns)

    def with_values(self, frame: pd.DataFrame, dropped: list[str] | None = None) -> "StationSeries":
        names = [c for c in frame.columns if c != TARGET_NAME]
        return replace(
            self,
            timestamps=pd.DatetimeIndex(frame.index),
            features=frame[names].to_numpy(dtype=np.float64),
            target=frame[TARGET_NAME].to_numpy(dtype=np.float64),
            feature_names=names,
            dropped_features=list(self.dropped_features) + list(dropped or []),
        )


def parse_timestamps(raw: pd.Series) -> pd.DatetimeIndex:
    """12자리 숫자면 YYYYMMDDHHMM, 아니면 ISO-8601로 해석한다."""
    text = raw.astype(str).str.strip()
    try:
        if text.str.fullmatch(r"\d{12}").all():
            return pd.DatetimeIndex(pd.to_datetime(text, format=COMPACT_TIMESTAMP))
        return pd.DatetimeIndex(pd.to_datetime(text, format="ISO8601"))
    except (ValueError, TypeError) as e:
        raise DataError(f"시각 열을 해석할 수 없습니다: {e}") from e


def _check_order(ts: pd.DatetimeIndex, path: Path):
    dup = ts[ts.duplicated()]
    if len(dup):
        raise DataError(f"{path}: 중복 시각 {len(dup)}개 (예: {[str(t) for t in dup[:5]]})")
    steps = ts[1:] <= ts[:-1]
    if steps.any():
        bad = ts[1:][steps]
        raise DataError(f"{path}: 시각이 증가하지 않는 행 {int(steps.sum())}개 (예: {[str(t) for t in bad[:5]]})")


def _to_hourly(frame: pd.DataFrame) -> pd.DataFrame:
    """30분 두 칸을 1시간으로. 한 칸이라도 결측이면 그 시간은 결측."""
    hourly = frame.index.floor("h")
    grouped = frame.groupby(hourly)
    complete = grouped.count() == 2
    summed = [c for c in frame.columns if c in SUMMED_COLUMNS]
    averaged = [c for c in frame.columns if c not in SUMMED_COLUMNS]
    out = pd.concat([grouped[summed].sum(), grouped[averaged].mean()], axis=1)[list(frame.columns)]
    return out.where(complete)


def load_csv(path: str | Path, column_map: dict[str, str] | None = None,
             station_id: str | None = None) -> StationSeries:
    """CSV를 StationSeries로 읽는다. 필수 열이 없거나 시각 순서가 어긋나면 DataError."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"파일이 없습니다: {path}")
    column_map = {**FLUXNET_COLUMN_MAP, **(column_map or {})}
    df = pd.read_csv(path, dtype=str)
    missing = [f"{logical}→{col}" for logical, col in column_map.items() if col not in df.columns]
    if missing:
        raise DataError(f"{path}: 필수 열이 없습니다: {missing}")

    timestamps = parse_timestamps(df[column_map["timestamp"]])
    _check_order(timestamps, path)
    names = list(FEATURE_NAMES) + [TARGET_NAME]
    values = pd.DataFrame(
        {name: pd.to_numeric(df[column_map[name]], errors="coerce").to_numpy() for name in names},
        index=timestamps,
    )

    if len(timestamps) > 1 and pd.Series(timestamps).diff().median() == pd.Timedelta(minutes=30):
        logger.info("[%s] 30분 자료 → 1시간 집계", station_id or path.stem)
        values = _to_hourly(values)

    grid = pd.date_range(values.index[0], values.index[-1], freq="h")
    inserted = len(grid) - len(values.index.intersection(grid))
    if inserted:
        logger.warning("[%s] 빠진 시각 %d개를 결측 행으로 채움", station_id or path.stem, inserted)
    values = values.reindex(grid)

    return StationSeries(
        station_id=station_id or path.stem,
        timestamps=pd.DatetimeIndex(values.index),
        features=values[list(FEATURE_NAMES)].to_numpy(dtype=np.float64),
        target=values[TARGET_NAME].to_numpy(dtype=np.float64),
    )
