"""애플리케이션 설정 관리 모듈."""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings


class RuntimeSettings(BaseSettings):
    """출력 위치, 시드, 병렬 작업 수."""

    grid_workers: int = Field(default=2, alias="FORECAST_GRID_WORKERS")
    out_dir: str = Field(default="outputs", alias="FORECAST_OUT_DIR")
    seed: int = Field(default=42, alias="FORECAST_SEED")
    db_path: str = Field(default="", alias="FORECAST_DB_PATH")  # 비어 있으면 <out>/results.db

    model_config = {"env_file": ".env", "extra": "ignore"}

    @property
    def workers(self) -> int:
        """그리드 풀 크기 (최소 1)."""
        return max(1, self.grid_workers)

    def database_path(self, out_dir: str | Path | None = None) -> Path:
        if self.db_path:
            return Path(self.db_path)
        return Path(out_dir or self.out_dir) / "results.db"


class LoggingSettings(BaseSettings):
    """로그 파일 위치와 레벨."""

    log_dir: str = Field(default="logs", alias="FORECAST_LOG_DIR")
    level: str = Field(default="INFO", alias="FORECAST_LOG_LEVEL")

    model_config = {"env_file": ".env", "extra": "ignore"}


class Settings:
    """전체 설정을 하나로 묶는 클래스."""

    def __init__(self):
        self.runtime = RuntimeSettings()
        self.logging = LoggingSettings()
