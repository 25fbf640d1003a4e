"""어텐션 커널 복잡도 측정."""

import pandas as pd
import pytest

from training.benchmark import (
    KERNELS, TimingRow, complexity_benchmark, fit_slope, slope_checks, write_benchmark_csv,
)


def test_fit_slope_of_power_law():
    lengths = [64, 128, 256, 512]
    assert fit_slope(lengths, [3e-4 * n ** 2 for n in lengths]) == pytest.approx(2.0)
    assert fit_slope(lengths, [0.5 * n for n in lengths]) == pytest.approx(1.0)


@pytest.mark.parametrize("kwargs", [
    {"lengths": (64, 32)},
    {"lengths": (64,)},
    {"trials": 2},
    {"kernels": ["dense"]},
])
def test_rejects_bad_settings(kwargs):
    with pytest.raises(ValueError):
        complexity_benchmark(**{"lengths": (16, 32), **kwargs})


def test_small_run_writes_every_kernel(tmp_path):
    rows = complexity_benchmark(lengths=(16, 32), trials=3, d_model=4)
    assert len(rows) == len(KERNELS) * 2
    assert [r.kernel for r in rows[::2]] == list(KERNELS)
    for name in KERNELS:
        slopes = {r.slope for r in rows if r.kernel == name}
        assert len(slopes) == 1
    frame = pd.read_csv(write_benchmark_csv(rows, tmp_path / "benchmark.csv"))
    assert list(frame.columns) == ["kernel", "L", "median_ms", "slope"]
    assert len(frame) == 8 and (frame["median_ms"] >= 0).all()


def test_slope_checks():
    rows = [TimingRow("full", 256, 1.0, slope=1.9), TimingRow("lsh", 256, 1.0, slope=1.2),
            TimingRow("prob_sparse", 256, 1.0, slope=1.8), TimingRow("auto_correlation", 256, 1.0, slope=1.3)]
    assert slope_checks(rows) == {"full": True, "lsh": True, "prob_sparse": False, "auto_correlation": True}


@pytest.mark.slow
def test_full_attention_grows_faster_than_sparse_kernels():
    rows = complexity_benchmark(["full", "lsh"], lengths=(512, 1024, 2048), trials=3)
    slopes = {r.kernel: r.slope for r in rows}
    assert slopes["full"] > slopes["lsh"]
