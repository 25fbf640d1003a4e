"""어텐션 커널 순전파 시간 측정.

길이 L마다 trials회 재서 중앙값(ms)을 남기고, 커널별로 log(시간)–log(L)
직선의 기울기를 맞춘다. 절대 시간 대신 기울기로 복잡도 추세를 본다.
"""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from attention.auto_correlation import auto_correlation_attention
from attention.config import AutoCorrelationConfig, LshConfig, ProbSparseConfig
from attention.full import full_kernel
from attention.lsh import lsh_attend
from attention.prob_sparse import prob_sparse_attention
from core.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

BENCHMARK_LENGTHS = (256, 512, 1024, 2048, 4096)
BENCHMARK_D_MODEL = 16
MIN_TRIALS = 3

# 기울기 기준: 전체 어텐션은 2차 추세, 희소 커널은 그보다 완만해야 한다
QUADRATIC_SLOPE = 1.7
SUBQUADRATIC_SLOPE = 1.5

BenchKernel = Callable[[Tensor, Tensor, Tensor], Tensor]

KERNELS: dict[str, BenchKernel] = {
    "full": lambda q, k, v: full_kernel(q, k, v, False),
    "lsh": lambda q, k, v: lsh_attend(q, v, LshConfig()),
    "prob_sparse": lambda q, k, v: prob_sparse_attention(q, k, v, ProbSparseConfig()),
    "auto_correlation": lambda q, k, v: auto_correlation_attention(q, k, v, AutoCorrelationConfig()),
}


@dataclass
class TimingRow:
    kernel: str
    length: int
    median_ms: float
    slope: float = float("nan")


def fit_slope(lengths, times_ms) -> float:
    """log-log 1차 회귀 기울기."""
    x = np.log(np.asarray(lengths, dtype=np.float64))
    y = np.log(np.maximum(np.asarray(times_ms, dtype=np.float64), 1e-9))
    return float(np.polyfit(x, y, 1)[0])


def time_kernel(kernel: BenchKernel, length: int, d_model: int, trials: int, seed: int = 0) -> float:
    """trials회 순전파 중앙값(ms). 기록 없이 돈다."""
    rng = np.random.default_rng(seed)
    q, k, v = (Tensor(rng.standard_normal((1, length, d_model))) for _ in range(3))
    samples = []
    with no_grad():
        for _ in range(trials):
            started = time.perf_counter()
            kernel(q, k, v)
            samples.append((time.perf_counter() - started) * 1000.0)
    return float(np.median(samples))


def complexity_benchmark(kernels: list[str] | None = None, lengths=BENCHMARK_LENGTHS, trials: int = MIN_TRIALS,
                         d_model: int = BENCHMARK_D_MODEL, seed: int = 0) -> list[TimingRow]:
    names = list(kernels or KERNELS)
    unknown = [n for n in names if n not in KERNELS]
    if unknown:
        raise ValueError(f"알 수 없는 커널: {unknown} (가능: {list(KERNELS)})")
    lengths = list(lengths)
    if len(lengths) < 2 or any(a >= b for a, b in zip(lengths, lengths[1:])):
        raise ValueError(f"길이는 2개 이상, 오름차순이어야 합니다: {lengths}")
    if trials < MIN_TRIALS:
        raise ValueError(f"trials는 {MIN_TRIALS} 이상이어야 합니다: {trials}")

    rows: list[TimingRow] = []
    for name in names:
        kernel_rows = []
        for length in lengths:
            ms = time_kernel(KERNELS[name], length, d_model, trials, seed)
            kernel_rows.append(TimingRow(name, length, ms))
            logger.info("[%s] L=%d: %.2fms", name, length, ms)
        slope = fit_slope(lengths, [r.median_ms for r in kernel_rows])
        for r in kernel_rows:
            r.slope = slope
        logger.info("[%s] log-log 기울기 %.2f", name, slope)
        rows.extend(kernel_rows)
    return rows


def slope_checks(rows: list[TimingRow]) -> dict[str, bool]:
    """커널별 기울기 추세 판정. 기준이 없는 커널은 통과로 본다."""
    slopes = {r.kernel: r.slope for r in rows}
    checks = {}
    for name, slope in slopes.items():
        if name == "full":
            checks[name] = slope >= QUADRATIC_SLOPE
        elif name in ("lsh", "prob_sparse"):
            checks[name] = slope <= SUBQUADRATIC_SLOPE
        else:
            checks[name] = True
    return checks


def benchmark_frame(rows: list[TimingRow]) -> pd.DataFrame:
    return pd.DataFrame.from_records(
        [{"kernel": r.kernel, "L": r.length, "median_ms": r.median_ms, "slope": r.slope} for r in rows],
        columns=["kernel", "L", "median_ms", "slope"],
    )


def write_benchmark_csv(rows: list[TimingRow], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    benchmark_frame(rows).to_csv(path, index=False, float_format="%.4f")
    return path
