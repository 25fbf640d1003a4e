"""토양 온도 예측 실험 도구 메인 진입점.

Usage:
    python main.py ingest                       # 관측소 자료 정제·캐시
    python main.py train --model lstm --horizon 96
    python main.py grid --config runs/full.json # 모델 × 관측소 × H 전체 표
    python main.py benchmark --trials 3         # 어텐션 복잡도 측정
    python main.py gradcheck                    # 기울기·불변식 점검

종료 코드: 0 성공, 1 실행 중 실패, 2 사용법/설정 오류.
"""

import argparse
import io
import logging
import logging.handlers
import sys
from pathlib import Path

from dotenv import load_dotenv

# .env 파일 로드 (Settings 임포트 전에 실행)
load_dotenv()

from config import settings
from config.run_config import RunConfig
from core.database import ResultStore
from core.errors import DataError, TrainingDiverged
from models.base import ModelKind
from scheduler.jobs import MissingCacheError, ForecastJobs
from training.benchmark import BENCHMARK_LENGTHS, MIN_TRIALS
from training.diagnostics import DEFAULT_INSTANCES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def setup_logging():
    """콘솔과 일별 롤링 파일에 로그를 남긴다."""
    if logging.getLogger().handlers:
        return  # 이미 설정됨 (재호출, 테스트 러너)
    log_dir = Path(settings.logging.log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=settings.logging.level.upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=[
            logging.StreamHandler(io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", errors="replace")),
            logging.handlers.TimedRotatingFileHandler(
                log_dir / "forecast.log", encoding="utf-8",
                when="midnight",    # 자정마다 롤링
                backupCount=30,     # 30일 보관 후 자동 삭제
            ),
        ],
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="실행 설정 JSON (없으면 번들 합성 관측소)")
    common.add_argument("--seed", type=int, help="전역 시드 덮어쓰기")
    common.add_argument("--out", help="출력 디렉터리")
    common.add_argument("--station", help="관측소 id 하나로 제한")
    common.add_argument("--model", choices=[k.value for k in ModelKind], help="모델 종류 하나로 제한")
    common.add_argument("--horizon", type=int, help="예측 길이 하나로 제한")

    parser = argparse.ArgumentParser(description="토양 온도 예측 실험 도구")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="원자료 정제·분할 통계·캐시")
    sub.add_parser("train", parents=[common], help="한 칸 학습과 시험 평가")
    sub.add_parser("grid", parents=[common], help="전체 결과 그리드와 보고서")
    bench = sub.add_parser("benchmark", parents=[common], help="어텐션 커널 복잡도 측정")
    bench.add_argument("--trials", type=int, default=MIN_TRIALS, help="길이별 반복 횟수 (중앙값 사용)")
    bench.add_argument("--lengths", type=int, nargs="+", default=list(BENCHMARK_LENGTHS), help="시퀀스 길이 목록")
    check = sub.add_parser("gradcheck", parents=[common], help="유한 차분 기울기·불변식 점검")
    check.add_argument("--instances", type=int, default=DEFAULT_INSTANCES, help="연산별 무작위 사례 수")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """설정 파일 → 환경 변수 시드 → 명령행 덮어쓰기 순으로 합친다."""
    config = RunConfig.load(args.config)
    seed = args.seed
    if seed is None and args.config is None:
        seed = settings.runtime.seed
    return config.with_overrides(seed=seed, out_dir=args.out, station=args.station,
                                 kind=args.model, horizon=args.horizon)


def run_ingest(jobs: ForecastJobs) -> int:
    missing = jobs.config.missing_paths()
    if missing:
        logger.error("원자료 파일이 없습니다: %s", ", ".join(missing))
        return EXIT_USAGE
    for outcome in jobs.job_ingest():
        logger.info("\n%s", outcome.table)
        if outcome.dropped_features:
            logger.warning("[%s] 제외된 피처: %s", outcome.station_id, ", ".join(outcome.dropped_features))
    if jobs.failures:
        logger.error("적재 실패 관측소: %s", "; ".join(jobs.failures))
        return EXIT_FAILURE
    return EXIT_OK


def run_train(jobs: ForecastJobs) -> int:
    config = jobs.config
    kind, station, horizon = config.kinds[0], config.stations[0].id, config.horizons[0]
    try:
        cell = jobs.job_train(kind, station, horizon)
    except MissingCacheError as e:
        logger.error("%s", e)
        return EXIT_FAILURE
    except TrainingDiverged as e:
        logger.error("학습 발산 [%s/%s/H=%d]: %s (마지막 정상 체크포인트: %s)",
                     kind.value, station, horizon, e, e.last_good_checkpoint or "없음")
        return EXIT_FAILURE
    except DataError as e:
        logger.error("[%s] 학습 자료 오류: %s", station, e)
        return EXIT_FAILURE
    last = cell.loss_curve[-1] if cell.loss_curve else None
    val = "-" if last is None or last.val_loss is None else f"{last.val_loss:.6f}"
    logger.info("최종 val MSE: %s | 시험 MSE %.6f, MAE %.6f", val, cell.row.mse_norm, cell.row.mae_norm)
    return EXIT_OK


def run_grid(jobs: ForecastJobs) -> int:
    result = jobs.job_grid()
    logger.info("그리드 완료: %d칸 기록, %d칸 건너뜀", len(result.report.rows), len(result.report.skipped))
    return EXIT_OK


def run_benchmark(jobs: ForecastJobs, args: argparse.Namespace) -> int:
    try:
        jobs.job_benchmark(tuple(args.lengths), args.trials)
    except ValueError as e:
        logger.error("벤치마크 설정 오류: %s", e)
        return EXIT_USAGE
    return EXIT_OK


def run_gradcheck(jobs: ForecastJobs, args: argparse.Namespace) -> int:
    if args.instances < 1:
        logger.error("--instances는 1 이상이어야 합니다: %d", args.instances)
        return EXIT_USAGE
    results = jobs.job_gradcheck(args.instances)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()

    try:
        config = load_config(args)
    except (ValueError, OSError) as e:
        logger.error("설정 오류: %s", e)
        return EXIT_USAGE

    out_dir = Path(config.out_dir or settings.runtime.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("=" * 60)
    logger.info("토양 온도 예측 [%s] 시드 %d | 출력 %s", args.command, config.seed, out_dir)
    logger.info("관측소: %s", ", ".join(s.id for s in config.stations))
    logger.info("모델: %s | H: %s", ", ".join(k.value for k in config.kinds), config.horizons)
    logger.info("=" * 60)

    store = ResultStore(settings.runtime.database_path(out_dir))
    jobs = ForecastJobs(config, store, out_dir, workers=settings.runtime.workers)

    if args.command == "ingest":
        code = run_ingest(jobs)
    elif args.command == "train":
        code = run_train(jobs)
    elif args.command == "grid":
        code = run_grid(jobs)
    elif args.command == "benchmark":
        code = run_benchmark(jobs, args)
    else:
        code = run_gradcheck(jobs, args)

    jobs.write_manifest()
    logger.info("종료 코드 %d", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
