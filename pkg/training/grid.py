"""(모델 종류 × 관측소 × 예측 길이) 결과 그리드.

각 칸은 서로 독립적인 학습·평가 작업이다. 칸들은 크기가 제한된 스레드 풀에서
돌고, 결과는 제출 순서대로 모아 한 곳에서만 보고서에 기록한다.
실패한 칸은 경고를 남기고 건너뛰며 나머지 칸은 계속 진행한다.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from core.errors import DataError
from models.base import HORIZONS, ModelKind, ModelSpec
from models.registry import build_model
from pipeline.features import TIME_FEATURE_DIMS
from pipeline.loader import StationSeries
from pipeline.splitting import SplitRanges, SplitSpec, chronological_split
from pipeline.stats import FeatureStats, normalize, training_stats
from pipeline.windows import WindowSet, make_windows
from training.evaluator import evaluate
from training.metrics import MetricsReport, MetricsRow
from training.trainer import EpochLog, TrainConfig, Trainer

logger = logging.getLogger(__name__)


@dataclass
class PreparedStation:
    """정제·정규화가 끝나 윈도우를 바로 만들 수 있는 관측소 자료."""
    station_id: str
    timestamps: pd.DatetimeIndex
    values: np.ndarray            # [T × (k+1)] 정규화 값, 마지막 열이 목표
    stats: FeatureStats
    ranges: SplitRanges
    dropped_features: list[str] = field(default_factory=list)

    @property
    def n_inputs(self) -> int:
        """모델 입력 열 수 = 관측 피처 + 목표 + 시간 피처."""
        return self.values.shape[1] + TIME_FEATURE_DIMS

    def windows(self, part: str, lookback: int, horizon: int, stride: int = 1) -> WindowSet:
        return make_windows(self.values, self.timestamps, self.ranges.part(part), lookback, horizon,
                            stride, label=f"[{self.station_id}] {part}")


def prepare_station(series: StationSeries, split: SplitSpec = SplitSpec(),
                    stats: FeatureStats | None = None) -> PreparedStation:
    """분할 → 학습 구간 통계 → 정규화. stats를 주면 다시 계산하지 않는다."""
    ranges = chronological_split(len(series), split, series.timestamps)
    stats = stats or training_stats(series, ranges)
    return PreparedStation(
        station_id=series.station_id,
        timestamps=series.timestamps,
        values=normalize(series, stats),
        stats=stats,
        ranges=ranges,
        dropped_features=list(series.dropped_features),
    )


def cell_spec(base: ModelSpec, station: PreparedStation, horizon: int) -> ModelSpec:
    """관측소 입력 폭과 예측 길이를 반영한 ModelSpec."""
    data = base.model_dump()
    data.update(n_features=station.n_inputs, horizon=horizon)
    return ModelSpec.model_validate(data)


@dataclass
class CellResult:
    row: MetricsRow
    loss_curve: list[EpochLog]
    checkpoint: Path | None = None
    checkpoint_sha256: str = ""
    best_epoch: int = 0


@dataclass
class GridResult:
    report: MetricsReport
    cells: list[CellResult] = field(default_factory=list)

    def loss_curves(self) -> pd.DataFrame:
        records = [
            {"kind": c.row.kind, "station": c.row.station, "horizon": c.row.horizon,
             "epoch": log.epoch, "train_loss": log.train_loss, "val_loss": log.val_loss}
            for c in self.cells for log in c.loss_curve
        ]
        columns = ["kind", "station", "horizon", "epoch", "train_loss", "val_loss"]
        return pd.DataFrame.from_records(records, columns=columns)


def run_cell(station: PreparedStation, spec: ModelSpec, train_config: TrainConfig,
             checkpoint_dir: Path | None = None, stride: int = 1) -> CellResult:
    """한 칸: 모델 생성 → 학습(검증으로 최고 체크포인트 선택) → 시험 구간 평가."""
    label = f"{spec.kind.value}/{station.station_id}/H={spec.horizon}"
    train_windows = station.windows("train", spec.lookback, spec.horizon, stride)
    val_windows = station.windows("val", spec.lookback, spec.horizon)
    test_windows = station.windows("test", spec.lookback, spec.horizon)
    if len(train_windows) == 0 or len(test_windows) == 0:
        raise DataError(f"[{label}] 학습 또는 시험 윈도우가 없습니다 "
                        f"(train {len(train_windows)}, test {len(test_windows)})")

    model = build_model(spec, train_config.seed)
    trainer = Trainer(model, train_config, checkpoint_dir, label=label)
    result = trainer.fit(train_windows, val_windows)
    model.load_state_dict(result.best_state)
    row = evaluate(model, test_windows, station.stats, station=station.station_id)
    return CellResult(row, result.loss_curve, result.best_checkpoint, result.best_sha256, result.best_epoch)


def run_grid(stations: dict[str, PreparedStation | None], kinds: list[ModelKind],
             spec_for: Callable[[ModelKind], ModelSpec], train_for: Callable[[ModelKind], TrainConfig],
             horizons: tuple[int, ...] = HORIZONS, workers: int = 1, out_dir: Path | None = None,
             stride: int = 1) -> GridResult:
    """종류 × 관측소 × H 전 칸을 돌려 best 표시가 된 보고서를 만든다.

    stations 값이 None이면 그 관측소 자료가 없다는 뜻이며 해당 칸들은 건너뛴다.
    """
    report = MetricsReport()
    grid = GridResult(report)
    jobs: list[tuple[str, Callable[[], CellResult]]] = []
    for station_id, station in stations.items():
        if station is None:
            logger.warning("[%s] 관측소 자료가 없어 %d개 칸을 건너뜁니다", station_id, len(kinds) * len(horizons))
            report.skipped.extend(f"{k.value}/{station_id}/H={h}" for k in kinds for h in horizons)
            continue
        for kind in kinds:
            for horizon in horizons:
                key = f"{kind.value}/{station_id}/H={horizon}"
                ckpt = Path(out_dir) / "checkpoints" / kind.value / station_id / f"H{horizon}" if out_dir else None

                def job(station=station, kind=kind, horizon=horizon, ckpt=ckpt):
                    spec = cell_spec(spec_for(kind), station, horizon)
                    return run_cell(station, spec, train_for(kind), ckpt, stride)

                jobs.append((key, job))

    logger.info("그리드 실행: %d칸, 동시 작업 %d개", len(jobs), workers)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [(key, pool.submit(job)) for key, job in jobs]
        for key, future in futures:
            try:
                cell = future.result()
            except Exception as e:
                logger.error("[%s] 칸 실행 실패: %s", key, e)
                report.skipped.append(key)
                continue
            report.add(cell.row)
            grid.cells.append(cell)

    report.mark_best()
    if report.skipped:
        logger.warning("건너뛴 칸 %d개: %s", len(report.skipped), ", ".join(report.skipped))
    return grid
