"""MSE / MAE와 분할 합산이 가능한 누적기."""

from dataclasses import dataclass, field

import numpy as np

from core.errors import ShapeError


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    t = np.asarray(truth, dtype=np.float64).reshape(-1)
    if p.shape != t.shape:
        raise ShapeError(f"예측 {p.shape} 과 정답 {t.shape} 길이가 다릅니다")
    if p.size == 0:
        raise ShapeError("빈 집합의 지표는 정의되지 않습니다")
    return p, t


def mse(pred, truth) -> float:
    """(1/n)·Σ(T_real − T_pre)²."""
    p, t = _pair(pred, truth)
    return float(np.mean((t - p) ** 2))


def mae(pred, truth) -> float:
    """(1/n)·Σ|T_real − T_pre|."""
    p, t = _pair(pred, truth)
    return float(np.mean(np.abs(t - p)))


@dataclass
class MetricAccumulator:
    """제곱/절대 오차 합과 개수. 두 누적기를 합치면 전체 집합 값과 같다."""
    count: int = 0
    sum_sq: float = 0.0
    sum_abs: float = 0.0

    def update(self, pred, truth) -> "MetricAccumulator":
        p, t = _pair(pred, truth)
        diff = t - p
        self.count += diff.size
        self.sum_sq += float(np.sum(diff * diff))
        self.sum_abs += float(np.sum(np.abs(diff)))
        return self

    def merge(self, other: "MetricAccumulator") -> "MetricAccumulator":
        return MetricAccumulator(self.count + other.count, self.sum_sq + other.sum_sq,
                                 self.sum_abs + other.sum_abs)

    @property
    def mse(self) -> float:
        if not self.count:
            raise ShapeError("누적된 값이 없습니다")
        return self.sum_sq / self.count

    @property
    def mae(self) -> float:
        if not self.count:
            raise ShapeError("누적된 값이 없습니다")
        return self.sum_abs / self.count


METRIC_NAMES = ("mse_norm", "mae_norm", "mse_phys", "mae_phys")


@dataclass
class MetricsRow:
    """(모델 종류, 관측소, H) 한 칸의 결과."""
    kind: str
    station: str
    horizon: int
    mse_norm: float
    mae_norm: float
    mse_phys: float
    mae_phys: float
    n_samples: int
    wall_time_s: float
    best: set[str] = field(default_factory=set)

    def metric(self, name: str) -> float:
        return getattr(self, name)


@dataclass
class MetricsReport:
    rows: list[MetricsRow] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def add(self, row: MetricsRow):
        self.rows.append(row)

    def mark_best(self) -> "MetricsReport":
        """(관측소, H, 지표)마다 모든 종류 중 가장 낮은 값을 표시한다. 동률이면 먼저 온 행."""
        for row in self.rows:
            row.best = set()
        cells: dict[tuple[str, int], list[MetricsRow]] = {}
        for row in self.rows:
            cells.setdefault((row.station, row.horizon), []).append(row)
        for rows in cells.values():
            for name in METRIC_NAMES:
                min(rows, key=lambda r: r.metric(name)).best.add(name)
        return self

    def cell(self, kind: str, station: str, horizon: int) -> MetricsRow | None:
        for row in self.rows:
            if (row.kind, row.station, row.horizon) == (kind, station, horizon):
                return row
        return None
