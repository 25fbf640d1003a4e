"""결과 보고서: CSV와 표 형식 텍스트.

표는 관측소를 열 묶음으로, 예측 길이를 하위 열로, 모델마다 MSE/MAE 두 행을 둔다.
기준 모델(LSTM/CNN)과 트랜스포머 계열은 별도 표로 나누며, 같은 (관측소, H, 지표)
칸에서 가장 낮은 값에는 '*'를 붙인다.
"""

import logging
from pathlib import Path

import pandas as pd

from config.stations import STATION_ORDER
from models.base import HORIZONS, ModelKind
from training.metrics import METRIC_NAMES, MetricsReport

logger = logging.getLogger(__name__)

DISPLAY_NAMES = {
    ModelKind.LSTM: "LSTM",
    ModelKind.CNN: "CNN",
    ModelKind.VANILLA: "Transformer",
    ModelKind.INFORMER: "Informer",
    ModelKind.AUTOFORMER: "Autoformer",
    ModelKind.REFORMER: "Reformer",
    ModelKind.ETSFORMER: "ETSformer",
}

KIND_DETAILS = {
    ModelKind.LSTM: "적층 LSTM",
    ModelKind.CNN: "1D 합성곱",
    ModelKind.VANILLA: "전체 어텐션 인코더-디코더",
    ModelKind.INFORMER: "ProbSparse 어텐션",
    ModelKind.AUTOFORMER: "자기상관 + 시계열 분해",
    ModelKind.REFORMER: "LSH 어텐션 + 가역 층",
    ModelKind.ETSFORMER: "지수 평활 + 주파수 어텐션",
}

BASELINE_KINDS = [k for k in ModelKind if not k.is_transformer]
TRANSFORMER_KINDS = [k for k in ModelKind if k.is_transformer]

COMPARISON_HORIZON = 192
CSV_COLUMNS = ["kind", "station", "horizon", *METRIC_NAMES, "n_samples", "wall_time_s", "best"]


def ordered_stations(report: MetricsReport) -> list[str]:
    """카탈로그 순서를 먼저, 나머지는 처음 나온 순서대로."""
    seen = list(dict.fromkeys(row.station for row in report.rows))
    known = [s for s in STATION_ORDER if s in seen]
    return known + [s for s in seen if s not in known]


def report_frame(report: MetricsReport, timing: bool = False) -> pd.DataFrame:
    """CSV 열 구성. 실행 시간은 매번 달라지므로 timing=True일 때만 넣는다."""
    records = [
        {"kind": r.kind, "station": r.station, "horizon": r.horizon,
         **{name: r.metric(name) for name in METRIC_NAMES},
         "n_samples": r.n_samples, "wall_time_s": r.wall_time_s,
         "best": ";".join(name for name in METRIC_NAMES if name in r.best)}
        for r in report.rows
    ]
    columns = CSV_COLUMNS if timing else [c for c in CSV_COLUMNS if c != "wall_time_s"]
    return pd.DataFrame.from_records(records, columns=columns)


def write_report_csv(report: MetricsReport, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report_frame(report).to_csv(path, index=False, float_format="%.6f")
    return path


def _format(value: float, best: bool) -> str:
    return f"{value:.3f}{'*' if best else ''}"


def render_table(report: MetricsReport, kinds: list[ModelKind], title: str, scale: str = "norm",
                 horizons: tuple[int, ...] = HORIZONS) -> str:
    """kinds 모델들만 담은 표 하나를 텍스트로 만든다. 값이 없는 칸은 '-'."""
    if scale not in ("norm", "phys"):
        raise ValueError(f"scale은 'norm' 또는 'phys'여야 합니다: {scale}")
    stations = ordered_stations(report)
    present = [k for k in kinds if any(r.kind == k.value for r in report.rows)]
    header_top = ["Methods", "Metrics"] + [s if i == 0 else "" for s in stations for i in range(len(horizons))]
    header_sub = ["", ""] + [str(h) for _ in stations for h in horizons]
    lines = [header_top, header_sub]
    for kind in present:
        for metric in ("mse", "mae"):
            name = f"{metric}_{scale}"
            cells = []
            for station in stations:
                for h in horizons:
                    row = report.cell(kind.value, station, h)
                    cells.append("-" if row is None else _format(row.metric(name), name in row.best))
            label = DISPLAY_NAMES[kind] if metric == "mse" else ""
            lines.append([label, metric.upper()] + cells)

    widths = [max(len(line[i]) for line in lines) for i in range(len(lines[0]))]
    body = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in lines]
    return "\n".join([title, *body])


def render_tables(report: MetricsReport, scale: str = "norm") -> str:
    unit = "정규화" if scale == "norm" else "물리 단위(°C)"
    parts = [
        render_table(report, BASELINE_KINDS, f"기존 딥러닝 모델 평가 ({unit})", scale),
        render_table(report, TRANSFORMER_KINDS, f"트랜스포머 계열 모델 평가 ({unit})", scale),
    ]
    return "\n\n".join(parts) + "\n"


def win_counts(report: MetricsReport, metric: str = "mae_norm") -> dict[str, int]:
    """모델별로 (관측소, H) 칸에서 최저 metric을 기록한 횟수."""
    counts = {row.kind: 0 for row in report.rows}
    for row in report.rows:
        if metric in row.best:
            counts[row.kind] += 1
    return counts


def comparison_table(report: MetricsReport, horizon: int = COMPARISON_HORIZON,
                     metric: str = "mae_norm") -> pd.DataFrame:
    """모델, 설명, 예측 길이, 관측소별 MAE. 이번 실행 결과만으로 만든다."""
    stations = ordered_stations(report)
    records = []
    for kind in ModelKind:
        rows = {r.station: r for r in report.rows if r.kind == kind.value and r.horizon == horizon}
        if not rows:
            continue
        record = {"method": DISPLAY_NAMES[kind], "details": KIND_DETAILS[kind], "horizon": horizon}
        record.update({s: rows[s].metric(metric) if s in rows else None for s in stations})
        records.append(record)
    return pd.DataFrame.from_records(records, columns=["method", "details", "horizon", *stations])


def write_report(report: MetricsReport, out_dir: Path, loss_curves: pd.DataFrame | None = None) -> dict[str, Path]:
    """보고서 산출물 전부를 out_dir에 쓰고 이름 → 경로를 반환한다."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"metrics_csv": write_report_csv(report, out_dir / "metrics.csv")}

    tables = render_tables(report, "norm") + "\n" + render_tables(report, "phys")
    wins = win_counts(report)
    tables += "\n최저 MAE 칸 수: " + ", ".join(f"{k}={v}" for k, v in wins.items()) + "\n"
    if report.skipped:
        tables += "건너뛴 칸: " + ", ".join(report.skipped) + "\n"
    paths["tables"] = out_dir / "tables.txt"
    paths["tables"].write_text(tables, encoding="utf-8")

    paths["comparison_csv"] = out_dir / f"comparison_h{COMPARISON_HORIZON}.csv"
    comparison_table(report).to_csv(paths["comparison_csv"], index=False, float_format="%.6f")

    if loss_curves is not None:
        paths["loss_curves_csv"] = out_dir / "loss_curves.csv"
        loss_curves.to_csv(paths["loss_curves_csv"], index=False, float_format="%.8f")
    logger.info("보고서 저장: %s", ", ".join(str(p) for p in paths.values()))
    return paths
