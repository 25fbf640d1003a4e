"""번들 합성 관측소 생성기.

일주기/연주기 사인 + 약한 추세 + 시드 고정 잡음으로 FLUXNET 열 이름을 가진
1시간 간격 CSV를 만든다. 피처 수준과 진폭은 카탈로그 참고 통계에서 가져오며,
참고 통계가 결측 표시값인 피처(예: BE-Vie 장파 복사)는 그대로 −9999로 채운다.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from config.stations import FEATURE_NAMES, MISSING_SENTINEL, STATIONS, TARGET_NAME
from pipeline.loader import COMPACT_TIMESTAMP, FLUXNET_COLUMN_MAP

logger = logging.getLogger(__name__)

DEFAULT_REFERENCE_STATION = "NL-Loo"
DAILY_SHARE = 0.15   # (max − min) 대비 일주기 진폭
ANNUAL_SHARE = 0.15  # (max − min) 대비 연주기 진폭
SOIL_LAG_HOURS = 3


def synthetic_frame(station_id: str = "SYN-001", n_rows: int = 1000, seed: int = 0,
                    start: str = "2010-01-01 00:00", noise: float = 0.0,
                    trend_per_year: float = 0.1, sentinel_features: tuple[str, ...] = ()) -> pd.DataFrame:
    """FLUXNET 열 이름의 DataFrame. noise=0이면 잡음 없는 결정적 신호."""
    rng = np.random.default_rng(seed)
    timestamps = pd.date_range(start, periods=n_rows, freq="h")
    hours = np.arange(n_rows, dtype=np.float64)
    hour_of_day = timestamps.hour.to_numpy(dtype=np.float64)
    day_of_year = timestamps.dayofyear.to_numpy(dtype=np.float64)
    daily = np.sin(2 * np.pi * (hour_of_day - 9.0) / 24.0)
    annual = np.sin(2 * np.pi * (day_of_year - 110.0) / 365.25)
    years = hours / (24 * 365.25)

    reference = STATIONS.get(station_id, STATIONS[DEFAULT_REFERENCE_STATION]).reference
    columns: dict[str, np.ndarray] = {}
    for name in FEATURE_NAMES:
        lo, hi, mean = reference[name]
        if name in sentinel_features or mean == MISSING_SENTINEL:
            columns[name] = np.full(n_rows, MISSING_SENTINEL)
            continue
        span = hi - lo
        value = mean + DAILY_SHARE * span * daily + ANNUAL_SHARE * span * annual
        value += trend_per_year * span * 0.01 * years
        if noise:
            value += noise * span * 0.01 * rng.standard_normal(n_rows)
        columns[name] = np.clip(value, lo, hi)

    lo, hi, mean = reference["air_temp"]
    span = hi - lo
    lagged_daily = np.sin(2 * np.pi * (hour_of_day - 9.0 - SOIL_LAG_HOURS) / 24.0)
    soil = mean + 0.5 * DAILY_SHARE * span * lagged_daily + ANNUAL_SHARE * span * annual
    soil += trend_per_year * span * 0.01 * years
    if noise:
        soil += noise * span * 0.01 * rng.standard_normal(n_rows)
    columns[TARGET_NAME] = soil

    frame = pd.DataFrame({FLUXNET_COLUMN_MAP[name]: values for name, values in columns.items()})
    frame.insert(0, FLUXNET_COLUMN_MAP["timestamp"], timestamps.strftime(COMPACT_TIMESTAMP))
    return frame


def write_synthetic_csv(path: str | Path, **kwargs) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = synthetic_frame(**kwargs)
    frame.to_csv(path, index=False)
    logger.info("합성 관측소 CSV 생성: %s (%d행)", path, len(frame))
    return path
