"""결측 표시값/이상치 제거와 짧은 결측 구간 보간."""

import logging

import numpy as np
import pandas as pd

from config.stations import MISSING_SENTINEL, TARGET_NAME
from core.errors import DataError
from pipeline.loader import StationSeries
from pipeline.splitting import SplitSpec, chronological_split

logger = logging.getLogger(__name__)

DEFAULT_MAX_GAP = 3          # 시간, 이 길이 이하 결측 구간만 선형 보간
DROP_THRESHOLD = 0.5         # 학습 구간 결측 비율이 이보다 크면 피처 제외

# 물리적으로 가능한 범위 (밖이면 결측 처리)
PHYSICAL_RANGES = {
    "lw_rad": (50.0, 700.0),
    "sw_rad": (-50.0, 1500.0),
    "air_temp": (-60.0, 60.0),
    "pressure": (50.0, 110.0),
    "wind": (0.0, 75.0),
    "precip": (0.0, 200.0),
    "soil_moisture": (0.0, 100.0),
    "soil_temp_5cm": (-40.0, 60.0),
}


def mask_sentinel(frame: pd.DataFrame, sentinel: float = MISSING_SENTINEL) -> pd.DataFrame:
    return frame.mask(np.isclose(frame.to_numpy(dtype=np.float64), sentinel))


def mask_out_of_range(frame: pd.DataFrame) -> pd.DataFrame:
    out = frame.copy()
    for col in out.columns:
        lo, hi = PHYSICAL_RANGES.get(col, (-np.inf, np.inf))
        out[col] = out[col].where(out[col].isna() | out[col].between(lo, hi))
    return out


def fill_short_gaps(column: pd.Series, max_gap: int) -> pd.Series:
    """양쪽이 관측된 길이 ≤ max_gap 결측 구간만 선형 보간한다."""
    missing = column.isna()
    if not missing.any() or max_gap == 0:
        return column
    run_id = (missing != missing.shift()).cumsum()
    run_len = missing.groupby(run_id).transform("sum")
    interpolated = column.interpolate(method="linear", limit_area="inside")
    fillable = missing & (run_len <= max_gap) & interpolated.notna()
    return column.where(~fillable, interpolated)


def clean(series: StationSeries, sentinel: float = MISSING_SENTINEL, max_gap: int = DEFAULT_MAX_GAP,
          split: SplitSpec = SplitSpec()) -> StationSeries:
    """결측 표시값 → 결측, 범위 밖 → 결측, 짧은 구간 보간, 결측 과다 피처 제외.

    목표 열이 학습 구간의 절반 넘게 결측이면 관측소를 쓸 수 없으므로 DataError.
    """
    if max_gap < 0:
        raise ValueError(f"max_gap은 0 이상이어야 합니다: {max_gap}")
    frame = mask_out_of_range(mask_sentinel(series.frame(), sentinel))
    frame = frame.apply(lambda col: fill_short_gaps(col, max_gap))

    ranges = chronological_split(len(frame), split, series.timestamps)
    start, stop = ranges.train
    missing_share = frame.iloc[start:stop].isna().mean()
    if missing_share[TARGET_NAME] > DROP_THRESHOLD:
        raise DataError(
            f"[{series.station_id}] 목표 열 결측 {missing_share[TARGET_NAME]:.0%} > {DROP_THRESHOLD:.0%}: 사용할 수 없는 관측소"
        )
    dropped = [c for c in series.feature_names if missing_share[c] > DROP_THRESHOLD]
    for name in dropped:
        logger.warning("[%s] 피처 '%s' 제외 (학습 구간 결측 %.0f%%)", series.station_id, name, missing_share[name] * 100)
    return series.with_values(frame.drop(columns=dropped), dropped)
