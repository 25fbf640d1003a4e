"""시험 구간 평가: 정규화/물리 단위 양쪽 MSE·MAE."""

import logging
import time

import numpy as np

from core.errors import DataError
from models.base import ForecastModel
from pipeline.stats import FeatureStats, denormalize_target
from pipeline.windows import WindowSet
from training.metrics import MetricAccumulator, MetricsRow

logger = logging.getLogger(__name__)

EVAL_BATCH_SIZE = 256


def predict_windows(model: ForecastModel, windows: WindowSet, batch_size: int = EVAL_BATCH_SIZE):
    """(예측, 정답) 배치를 순서대로 낸다. 예측은 [B, H]."""
    for x, y, future in windows.iter_batches(batch_size):
        yield model.predict(x, future)[..., 0], y


def evaluate_loss(model: ForecastModel, windows: WindowSet, batch_size: int = EVAL_BATCH_SIZE) -> float:
    acc = MetricAccumulator()
    for pred, truth in predict_windows(model, windows, batch_size):
        acc.update(pred, truth)
    return acc.mse


def evaluate(model: ForecastModel, windows: WindowSet, stats: FeatureStats,
             station: str = "", batch_size: int = EVAL_BATCH_SIZE) -> MetricsRow:
    """모든 시험 윈도우와 모든 예측 스텝을 한꺼번에 집계한다.

    물리 단위 지표는 역정규화한 값으로 다시 계산한다.
    """
    if len(windows) == 0:
        raise DataError(f"[{station}] 평가할 시험 윈도우가 없습니다")
    started = time.perf_counter()
    norm, phys = MetricAccumulator(), MetricAccumulator()
    for pred, truth in predict_windows(model, windows, batch_size):
        norm.update(pred, truth)
        phys.update(denormalize_target(pred, stats), denormalize_target(truth, stats))
    row = MetricsRow(
        kind=model.kind.value,
        station=station or stats.station_id,
        horizon=model.spec.horizon,
        mse_norm=norm.mse,
        mae_norm=norm.mae,
        mse_phys=phys.mse,
        mae_phys=phys.mae,
        n_samples=len(windows),
        wall_time_s=time.perf_counter() - started,
    )
    logger.info("[%s/%s/H=%d] MSE %.4f MAE %.4f (°C: MSE %.3f MAE %.3f, n=%d)",
                row.kind, row.station, row.horizon, row.mse_norm, row.mae_norm,
                row.mse_phys, row.mae_phys, row.n_samples)
    return row


def mean_predictor_mse(windows: WindowSet) -> float:
    """정규화 목표의 평균(0)을 예측할 때의 MSE."""
    acc = MetricAccumulator()
    for _, y, _ in windows.iter_batches(EVAL_BATCH_SIZE):
        acc.update(np.zeros_like(y), y)
    return acc.mse
