"""결과 그리드와 보고서 산출물."""

import numpy as np
import pandas as pd
import pytest

from models.base import ModelKind
from pipeline.cache import file_hash
from training.grid import prepare_station, run_grid
from training.metrics import METRIC_NAMES, MetricsReport, MetricsRow
from training.report import (
    BASELINE_KINDS, comparison_table, render_table, report_frame, win_counts, write_report,
)
from training.trainer import TrainConfig


def _row(kind, station, horizon, mse_norm):
    return MetricsRow(kind, station, horizon, mse_norm, mse_norm / 2, mse_norm * 4, mse_norm,
                      n_samples=5, wall_time_s=1.25)


@pytest.fixture
def report():
    rep = MetricsReport()
    rep.add(_row("lstm", "FR-Lbr", 96, 0.40))
    rep.add(_row("cnn", "FR-Lbr", 96, 0.30))
    rep.add(_row("lstm", "NL-Loo", 96, 0.20))
    rep.add(_row("cnn", "NL-Loo", 96, 0.25))
    rep.add(_row("informer", "NL-Loo", 192, 0.50))
    rep.add(_row("lstm", "NL-Loo", 192, 0.60))
    return rep.mark_best()


class TestGrid:
    @pytest.fixture
    def grid(self, tmp_path, synthetic_series, tiny):
        stations = {"SYN-001": prepare_station(synthetic_series), "XX-Gone": None}
        return run_grid(
            stations, [ModelKind.LSTM, ModelKind.CNN],
            spec_for=lambda kind: tiny(kind),
            train_for=lambda kind: TrainConfig(epochs=1, seed=0),
            horizons=(4,), workers=2, out_dir=tmp_path, stride=8,
        )

    def test_rows_and_skips(self, grid):
        assert [(r.kind, r.station, r.horizon) for r in grid.report.rows] == [
            ("lstm", "SYN-001", 4), ("cnn", "SYN-001", 4)]
        assert grid.report.skipped == ["lstm/XX-Gone/H=4", "cnn/XX-Gone/H=4"]

    def test_best_flags_are_argmin(self, grid):
        rows = grid.report.rows
        for name in METRIC_NAMES:
            winner = int(np.argmin([r.metric(name) for r in rows]))
            assert [name in r.best for r in rows] == [i == winner for i in range(len(rows))]

    def test_checkpoints_and_curves(self, grid, tmp_path):
        for cell in grid.cells:
            assert cell.checkpoint == tmp_path / "checkpoints" / cell.row.kind / "SYN-001" / "H4" / "best.ckpt"
            assert file_hash(cell.checkpoint) == cell.checkpoint_sha256
            assert cell.best_epoch == 1
        curves = grid.loss_curves()
        assert list(curves.columns) == ["kind", "station", "horizon", "epoch", "train_loss", "val_loss"]
        assert len(curves) == 2


class TestReport:
    def test_frame_columns(self, report):
        frame = report_frame(report)
        assert "wall_time_s" not in frame.columns
        assert "wall_time_s" in report_frame(report, timing=True).columns
        best = frame.set_index(["kind", "station", "horizon"])["best"]
        assert best[("cnn", "FR-Lbr", 96)] == ";".join(METRIC_NAMES)
        assert best[("lstm", "FR-Lbr", 96)] == ""

    def test_table_marks_lowest_value(self, report):
        text = render_table(report, BASELINE_KINDS, "baseline", horizons=(96, 192))
        lines = text.splitlines()
        assert lines[0] == "baseline"
        # 카탈로그 순서: NL-Loo 가 FR-Lbr 보다 앞
        assert lines[1].index("NL-Loo") < lines[1].index("FR-Lbr")
        lstm_mse = lines[3].split()
        assert lstm_mse[:2] == ["LSTM", "MSE"]
        assert lstm_mse[2:] == ["0.200*", "0.600", "0.400", "-"]

    def test_table_scale_checked(self, report):
        with pytest.raises(ValueError):
            render_table(report, BASELINE_KINDS, "x", scale="kelvin")

    def test_win_counts(self, report):
        assert win_counts(report) == {"lstm": 1, "cnn": 1, "informer": 1}

    def test_comparison_table(self, report):
        table = comparison_table(report, horizon=192)
        assert list(table["method"]) == ["Informer", "LSTM"]
        assert table.loc[table["method"] == "LSTM", "NL-Loo"].item() == pytest.approx(0.30)
        assert table["FR-Lbr"].isna().all()

    def test_write_report(self, report, tmp_path):
        curves = pd.DataFrame({"kind": ["lstm"], "station": ["NL-Loo"], "horizon": [96], "epoch": [1],
                               "train_loss": [0.5], "val_loss": [0.6]})
        paths = write_report(report, tmp_path / "report", curves)
        assert set(paths) == {"metrics_csv", "tables", "comparison_csv", "loss_curves_csv"}
        assert all(p.exists() for p in paths.values())
        assert len(pd.read_csv(paths["metrics_csv"])) == 6
        tables = paths["tables"].read_text(encoding="utf-8")
        assert "정규화" in tables and "물리 단위" in tables
        assert "0.200*" in tables

    def test_report_bytes_are_stable(self, report, tmp_path):
        a = write_report(report, tmp_path / "a")
        b = write_report(report, tmp_path / "b")
        for key in a:
            assert a[key].read_bytes() == b[key].read_bytes()
