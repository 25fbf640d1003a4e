"""명령별 작업 정의 모듈.

적재(ingest), 단일 학습(train), 결과 그리드(grid), 복잡도 측정(benchmark),
기울기 점검(gradcheck)을 관리한다. 모든 산출물은 출력 디렉터리 아래에 쓰고
결과 요약은 ResultStore에 남긴다.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from config.run_config import RunConfig, StationSource
from config.stations import FEATURE_LABELS, station_info
from core.database import ResultStore
from models.base import ModelKind
from pipeline.analysis import analyze_components
from pipeline.cache import (file_hash, read_cache_header, read_series_cache, read_stats_sidecar,
                            write_series_cache, write_stats_sidecar)
from pipeline.cleaning import clean
from pipeline.loader import StationSeries, load_csv
from pipeline.splitting import chronological_split
from pipeline.stats import FeatureStats, compute_stats, training_stats
from pipeline.synthetic import write_synthetic_csv
from training.benchmark import BENCHMARK_LENGTHS, MIN_TRIALS, TimingRow, complexity_benchmark, slope_checks, write_benchmark_csv
from training.diagnostics import DEFAULT_INSTANCES, CheckResult, run_suite
from training.metrics import MetricsReport
from training.grid import CellResult, GridResult, PreparedStation, cell_spec, prepare_station, run_cell, run_grid
from training.report import report_frame, write_report

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
# 실행 시각이 들어가 매번 달라지는 파일은 매니페스트에서 뺀다
MANIFEST_EXCLUDE = (".db", ".log", ".tmp")


class MissingCacheError(FileNotFoundError):
    """적재 캐시가 없어 학습/그리드를 시작할 수 없음."""


@dataclass
class IngestOutcome:
    station_id: str
    cache_path: Path
    sidecar_path: Path
    reused: bool
    n_rows: int
    dropped_features: list[str] = field(default_factory=list)
    table: str = ""


def stats_table(stats: FeatureStats, station_id: str) -> str:
    """피처별 min/max/mean 표. 카탈로그 관측소면 참고값 열을 함께 싣는다."""
    info = station_info(station_id)
    records = []
    for i, name in enumerate(stats.columns):
        record = {"feature": FEATURE_LABELS.get(name, name), "min": stats.minimum[i],
                  "max": stats.maximum[i], "mean": stats.mean[i]}
        if info is not None and name in info.reference:
            lo, hi, mean = info.reference[name]
            record.update(ref_min=lo, ref_max=hi, ref_mean=mean)
        records.append(record)
    frame = pd.DataFrame.from_records(records).set_index("feature")
    return f"[{station_id}] 피처 통계\n" + frame.to_string(float_format=lambda v: f"{v:.3f}")


class ForecastJobs:
    """명령 작업 모음."""

    def __init__(self, config: RunConfig, store: ResultStore, out_dir: Path, workers: int = 1):
        self.config = config
        self.store = store
        self.out_dir = Path(out_dir)
        self.workers = max(1, workers)
        self.failures: list[str] = []

    # ── 경로 ──────────────────────────────────────────────

    @property
    def cache_dir(self) -> Path:
        return self.out_dir / "cache"

    def cache_path(self, station_id: str) -> Path:
        return self.cache_dir / f"{station_id}.series"

    def sidecar_path(self, station_id: str) -> Path:
        return self.cache_dir / f"{station_id}.stats.json"

    def run_dir(self, kind: ModelKind, station_id: str, horizon: int) -> Path:
        return self.out_dir / "runs" / kind.value / station_id / f"H{horizon}"

    def raw_path(self, source: StationSource) -> Path:
        """설정의 원자료 경로. 합성 관측소는 시드로 CSV를 (다시) 만든다."""
        if source.path is not None:
            return Path(source.path)
        path = self.out_dir / "raw" / f"{source.id}.csv"
        syn = source.synthetic
        write_synthetic_csv(path, station_id=source.id, n_rows=syn.rows, seed=self.config.seed,
                            start=syn.start, noise=syn.noise, sentinel_features=syn.sentinel_features)
        return path

    def _ingest_settings(self, source: StationSource) -> dict:
        split = source.split(self.config.split)
        return {"max_gap": self.config.max_gap, "split": split.model_dump(mode="json")}

    # ── 적재 ──────────────────────────────────────────────

    def _cache_is_current(self, source: StationSource, raw_sha: str) -> bool:
        cache, sidecar = self.cache_path(source.id), self.sidecar_path(source.id)
        if not cache.exists() or not sidecar.exists():
            return False
        try:
            header = read_cache_header(cache)
            payload = read_stats_sidecar(sidecar)
        except (ValueError, OSError) as e:
            logger.warning("[%s] 캐시를 읽을 수 없어 다시 만듭니다: %s", source.id, e)
            return False
        return header.get("raw_sha256") == raw_sha and payload.get("settings") == self._ingest_settings(source)

    def ingest_station(self, source: StationSource) -> IngestOutcome:
        raw = self.raw_path(source)
        raw_sha = file_hash(raw)
        cache, sidecar = self.cache_path(source.id), self.sidecar_path(source.id)
        if self._cache_is_current(source, raw_sha):
            payload = read_stats_sidecar(sidecar)
            stats = FeatureStats.from_dict(payload["stats"])
            logger.info("[%s] 원자료 변경 없음: 캐시 재사용", source.id)
            return IngestOutcome(source.id, cache, sidecar, True, payload["n_rows"],
                                 payload["dropped_features"], stats_table(stats, source.id))

        split = source.split(self.config.split)
        series = load_csv(raw, source.column_map, source.id)
        cleaned = clean(series, max_gap=self.config.max_gap, split=split)
        ranges = chronological_split(len(cleaned), split, cleaned.timestamps)
        stats = training_stats(cleaned, ranges)
        components = analyze_components(cleaned.timestamps, cleaned.target, ranges, source.id)

        cache_sha = write_series_cache(cache, cleaned, raw_sha)
        write_stats_sidecar(sidecar, {
            "station_id": source.id,
            "n_rows": len(cleaned),
            "split_sizes": list(ranges.sizes()),
            "dropped_features": cleaned.dropped_features,
            "stats": stats.to_dict(),
            "full_stats": compute_stats(cleaned).to_dict(),
            "components": components.to_dict(),
            "settings": self._ingest_settings(source),
        })
        self.store.save_ingest(source.id, raw_sha, str(cache), cache_sha, len(cleaned), cleaned.dropped_features)
        logger.info("[%s] 적재 완료: %d행, 분할 %s, 제외 피처 %s", source.id, len(cleaned),
                    ranges.sizes(), cleaned.dropped_features or "없음")
        return IngestOutcome(source.id, cache, sidecar, False, len(cleaned), cleaned.dropped_features,
                             stats_table(stats, source.id))

    def job_ingest(self) -> list[IngestOutcome]:
        """모든 관측소 적재. 실패한 관측소는 failures에 남기고 계속한다."""
        logger.info("=== 자료 적재 (%d개 관측소) ===", len(self.config.stations))
        outcomes = []
        for source in self.config.stations:
            try:
                outcomes.append(self.ingest_station(source))
            except Exception as e:
                logger.error("[%s] 적재 실패: %s", source.id, e)
                self.failures.append(f"{source.id}: {e}")
        return outcomes

    # ── 학습 ──────────────────────────────────────────────

    def load_series(self, station_id: str) -> tuple[StationSeries, dict]:
        cache, sidecar = self.cache_path(station_id), self.sidecar_path(station_id)
        if not cache.exists() or not sidecar.exists():
            raise MissingCacheError(f"[{station_id}] 적재 캐시가 없습니다: {cache} (먼저 ingest를 실행하세요)")
        series, _ = read_series_cache(cache)
        return series, read_stats_sidecar(sidecar)

    def prepared(self, station_id: str) -> PreparedStation:
        series, payload = self.load_series(station_id)
        source = self.config.station(station_id)
        stats = FeatureStats.from_dict(payload["stats"])
        return prepare_station(series, source.split(self.config.split), stats)

    def _record_cell(self, cell: CellResult, seed: int, epochs: int) -> int:
        curve = [{"epoch": log.epoch, "train_loss": log.train_loss, "val_loss": log.val_loss,
                  "seconds": log.seconds} for log in cell.loss_curve]
        last = cell.loss_curve[-1] if cell.loss_curve else None
        run_id = self.store.save_run(
            cell.row.kind, cell.row.station, cell.row.horizon, seed, epochs,
            final_train_loss=last.train_loss if last else None,
            final_val_loss=last.val_loss if last else None,
            best_epoch=cell.best_epoch,
            checkpoint=str(cell.checkpoint or ""),
            checkpoint_sha256=cell.checkpoint_sha256,
        )
        self.store.save_loss_curve(run_id, curve)
        return run_id

    def job_train(self, kind: ModelKind, station_id: str, horizon: int) -> CellResult:
        """한 칸 학습 후 체크포인트·손실 곡선을 쓰고 시험 구간 지표까지 낸다."""
        logger.info("=== 학습: %s / %s / H=%d ===", kind.value, station_id, horizon)
        station = self.prepared(station_id)
        spec = cell_spec(self.config.model_spec(kind), station, horizon)
        train_config = self.config.train_config(kind)
        run_dir = self.run_dir(kind, station_id, horizon)
        cell = run_cell(station, spec, train_config, run_dir, self.config.stride)

        curve = pd.DataFrame([{"epoch": log.epoch, "train_loss": log.train_loss, "val_loss": log.val_loss}
                              for log in cell.loss_curve], columns=["epoch", "train_loss", "val_loss"])
        curve.to_csv(run_dir / "loss_curve.csv", index=False, float_format="%.8f")
        report_frame(MetricsReport(rows=[cell.row])).drop(columns=["best"]).to_csv(
            run_dir / "metrics.csv", index=False, float_format="%.6f")
        self._record_cell(cell, train_config.seed, train_config.epochs)

        last = cell.loss_curve[-1] if cell.loss_curve else None
        logger.info("학습 완료 [%s/%s/H=%d]: train MSE %s, val MSE %s, 시험 MSE %.4f, 체크포인트 %s",
                    kind.value, station_id, horizon,
                    "-" if last is None else f"{last.train_loss:.5f}",
                    "-" if last is None or last.val_loss is None else f"{last.val_loss:.5f}",
                    cell.row.mse_norm, cell.checkpoint)
        return cell

    # ── 그리드 ────────────────────────────────────────────

    def job_grid(self) -> GridResult:
        config = self.config
        logger.info("=== 결과 그리드: 관측소 %d × 모델 %d × H %d ===",
                    len(config.stations), len(config.kinds), len(config.horizons))
        stations: dict[str, PreparedStation | None] = {}
        for source in config.stations:
            try:
                stations[source.id] = self.prepared(source.id)
            except (MissingCacheError, ValueError) as e:
                logger.warning("[%s] 관측소 자료를 쓸 수 없습니다: %s", source.id, e)
                stations[source.id] = None

        result = run_grid(stations, list(config.kinds), config.model_spec, config.train_config,
                          tuple(config.horizons), self.workers, self.out_dir, config.stride)
        write_report(result.report, self.out_dir / "report", result.loss_curves())
        self.store.save_metrics(report_frame(result.report, timing=True).to_dict(orient="records"))
        for cell in result.cells:
            kind = ModelKind(cell.row.kind)
            self._record_cell(cell, config.seed, config.train_config(kind).epochs)
        return result

    # ── 벤치마크 / 기울기 점검 ─────────────────────────────

    def job_benchmark(self, lengths=BENCHMARK_LENGTHS, trials: int = MIN_TRIALS) -> list[TimingRow]:
        logger.info("=== 어텐션 복잡도 측정 ===")
        rows = complexity_benchmark(lengths=lengths, trials=trials, seed=self.config.seed)
        write_benchmark_csv(rows, self.out_dir / "benchmark.csv")
        self.store.save_benchmarks([{"kernel": r.kernel, "L": r.length, "median_ms": r.median_ms,
                                     "slope": r.slope} for r in rows])
        for name, ok in slope_checks(rows).items():
            log = logger.info if ok else logger.warning
            log("[%s] 기울기 추세 %s", name, "통과" if ok else "미달")
        return rows

    def job_gradcheck(self, instances: int = DEFAULT_INSTANCES) -> list[CheckResult]:
        logger.info("=== 기울기·불변식 점검 ===")
        results = run_suite(instances, self.config.seed)
        frame = pd.DataFrame([{"check": r.name, "error": r.error, "passed": r.passed, "detail": r.detail}
                              for r in results], columns=["check", "error", "passed", "detail"])
        self.out_dir.mkdir(parents=True, exist_ok=True)
        frame.to_csv(self.out_dir / "gradcheck.csv", index=False)
        failed = [r.name for r in results if not r.passed]
        if failed:
            logger.error("점검 실패 %d건: %s", len(failed), ", ".join(failed))
        else:
            logger.info("점검 %d건 모두 통과", len(results))
        return results

    # ── 매니페스트 ────────────────────────────────────────

    def write_manifest(self) -> Path:
        """출력 디렉터리의 산출물별 sha256 목록."""
        entries = {}
        for path in sorted(self.out_dir.rglob("*")):
            if not path.is_file() or path.name == MANIFEST_NAME or path.suffix in MANIFEST_EXCLUDE:
                continue
            entries[path.relative_to(self.out_dir).as_posix()] = hashlib.sha256(path.read_bytes()).hexdigest()
        manifest = self.out_dir / MANIFEST_NAME
        manifest.write_text(json.dumps({"artifacts": entries}, indent=2, sort_keys=True), encoding="utf-8")
        logger.info("매니페스트 저장: %d개 산출물", len(entries))
        return manifest
