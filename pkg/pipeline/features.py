"""시간 피처: 시각과 연중 일자의 sin/cos."""

import numpy as np
import pandas as pd

TIME_FEATURE_DIMS = 4
HOURS_PER_DAY = 24.0
DAYS_PER_YEAR = 365.25


def time_feature_matrix(timestamps: pd.DatetimeIndex) -> np.ndarray:
    """[T × 4]: sin(시각), cos(시각), sin(연중 일자), cos(연중 일자). 1월 1일 0시는 (0, 1, 0, 1)."""
    ts = pd.DatetimeIndex(timestamps)
    hour = ts.hour.to_numpy(dtype=np.float64) + ts.minute.to_numpy(dtype=np.float64) / 60.0
    day = ts.dayofyear.to_numpy(dtype=np.float64) - 1.0 + hour / HOURS_PER_DAY
    hour_angle = 2.0 * np.pi * hour / HOURS_PER_DAY
    day_angle = 2.0 * np.pi * day / DAYS_PER_YEAR
    return np.stack([np.sin(hour_angle), np.cos(hour_angle), np.sin(day_angle), np.cos(day_angle)], axis=1)


def time_features(timestamp) -> np.ndarray:
    """단일 시각의 4차원 시간 피처."""
    return time_feature_matrix(pd.DatetimeIndex([pd.Timestamp(timestamp)]))[0]
