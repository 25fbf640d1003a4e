"""목표 시계열 성분 분석: 추세/일주기 강도와 Holt-Winters 기준 오차."""

import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from attention.smoothing import holt_winters_path
from pipeline.splitting import SplitRanges

logger = logging.getLogger(__name__)

DAILY_PERIOD = 24
HW_ALPHA = 0.3
HW_BETA = 0.05
HW_GAMMA = 0.2
HW_HISTORY_DAYS = 14


@dataclass(frozen=True)
class ComponentReport:
    trend_strength: float
    seasonal_strength: float
    holt_winters_mae: float | None   # 검증 구간 하루 앞 예측 MAE (°C)
    holt_winters_origins: int

    def to_dict(self) -> dict:
        return asdict(self)


def _strength(component: pd.Series, remainder: pd.Series) -> float:
    """max(0, 1 − Var(R) / Var(C + R))."""
    total = (component + remainder).var(ddof=0)
    if not np.isfinite(total) or total == 0:
        return 0.0
    return float(max(0.0, 1.0 - remainder.var(ddof=0) / total))


def decompose_daily(target: pd.Series) -> tuple[pd.Series, pd.Series, pd.Series]:
    """24시간 중심 이동평균 추세, 시각별 평균 계절, 나머지."""
    trend = target.rolling(DAILY_PERIOD, center=True, min_periods=DAILY_PERIOD).mean()
    detrended = target - trend
    profile = detrended.groupby(np.asarray(target.index.hour)).transform("mean")
    remainder = detrended - profile
    return trend, profile, remainder


def holt_winters_reference(target: np.ndarray, rows: tuple[int, int]) -> tuple[float | None, int]:
    """rows 구간의 하루 간격 시점마다 직전 14일로 다음 24시간을 예측한 MAE."""
    start, stop = rows
    history = HW_HISTORY_DAYS * DAILY_PERIOD
    errors = []
    for origin in range(max(start, history), stop - DAILY_PERIOD + 1, DAILY_PERIOD):
        past = target[origin - history:origin]
        future = target[origin:origin + DAILY_PERIOD]
        if np.isnan(past).any() or np.isnan(future).any():
            continue
        first_day = past[:DAILY_PERIOD]
        forecast = holt_winters_path(past, HW_ALPHA, HW_BETA, HW_GAMMA, DAILY_PERIOD, DAILY_PERIOD,
                                     level0=float(first_day.mean()), growth0=0.0,
                                     season0=first_day - first_day.mean())
        errors.append(np.abs(forecast - future))
    if not errors:
        return None, 0
    return float(np.mean(np.concatenate(errors))), len(errors)


def analyze_components(timestamps: pd.DatetimeIndex, target: np.ndarray,
                       ranges: SplitRanges, station_id: str = "") -> ComponentReport:
    series = pd.Series(target, index=timestamps)
    trend, seasonal, remainder = decompose_daily(series)
    valid = trend.notna() & remainder.notna()
    trend_strength = _strength(trend[valid], remainder[valid])
    seasonal_strength = _strength(seasonal[valid], remainder[valid])
    mae, origins = holt_winters_reference(np.asarray(target, dtype=np.float64), ranges.val)
    report = ComponentReport(trend_strength, seasonal_strength, mae, origins)
    logger.info("[%s] 성분 분석: 추세 강도 %.3f, 일주기 강도 %.3f, Holt-Winters 하루 앞 MAE %s",
                station_id, trend_strength, seasonal_strength,
                "-" if mae is None else f"{mae:.3f}°C")
    return report
