"""미니배치 ADAM 학습 루프.

매 에폭 시드 고정 셔플 순서로 배치를 뽑아 정규화 목표에 대한 MSE를 최소화한다.
에폭마다 마지막 정상 체크포인트를, 검증 손실이 좋아질 때마다 최고 검증
체크포인트를 남긴다. 손실이 NaN이 되면 TrainingDiverged로 중단한다.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core import ops
from core.errors import DataError, NumericalError, TrainingDiverged
from core.tensor import Tape, Tensor, backward
from layers.optim import Adam
from models.base import ForecastModel, ModelKind
from models.registry import save_model
from pipeline.windows import WindowSet
from training.evaluator import evaluate_loss

logger = logging.getLogger(__name__)

# 학습 파라미터 기본값
TRANSFORMER_LEARNING_RATE = 0.0001
TRANSFORMER_EPOCHS = 5
BASELINE_LEARNING_RATE = 0.001
BASELINE_EPOCHS = 20
BATCH_SIZE = 32


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float = Field(default=BASELINE_LEARNING_RATE, gt=0)
    epochs: int = Field(default=BASELINE_EPOCHS, ge=0)
    batch_size: int = Field(default=BATCH_SIZE, ge=1)
    seed: int = 42
    # 학습 손실이 이 값 아래로 내려가면 남은 에폭을 건너뛴다
    target_train_loss: float | None = Field(default=None, gt=0)

    @classmethod
    def for_kind(cls, kind: ModelKind, **overrides) -> "TrainConfig":
        if kind.is_transformer:
            base = {"learning_rate": TRANSFORMER_LEARNING_RATE, "epochs": TRANSFORMER_EPOCHS}
        else:
            base = {"learning_rate": BASELINE_LEARNING_RATE, "epochs": BASELINE_EPOCHS}
        return cls(**{**base, **overrides})


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float | None
    seconds: float


@dataclass
class TrainResult:
    model: ForecastModel
    loss_curve: list[EpochLog] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float | None = None
    best_state: dict[str, np.ndarray] = field(default_factory=dict)
    final_checkpoint: Path | None = None
    best_checkpoint: Path | None = None
    checkpoint_sha256: str = ""
    best_sha256: str = ""

    @property
    def final_train_loss(self) -> float | None:
        return self.loss_curve[-1].train_loss if self.loss_curve else None

    @property
    def final_val_loss(self) -> float | None:
        return self.loss_curve[-1].val_loss if self.loss_curve else None


def mse_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    """pred [B, H, 1], target [B, H] → 스칼라 MSE."""
    diff = ops.sub(pred, Tensor(np.asarray(target)[..., None]))
    return ops.mean(ops.square(diff))


def train_step(model: ForecastModel, optimizer: Adam, x: np.ndarray, y: np.ndarray,
               future: np.ndarray) -> float:
    model.zero_grad()
    with Tape() as tape:
        loss = mse_loss(model(Tensor(x), Tensor(future)), y)
    value = loss.item()
    if not np.isfinite(value):
        raise NumericalError(f"손실이 유한하지 않습니다: {value}")
    backward(loss, tape)
    optimizer.step()
    return value


class Trainer:
    """모델 하나의 학습을 담당한다. checkpoint_dir가 없으면 파일을 쓰지 않는다."""

    def __init__(self, model: ForecastModel, config: TrainConfig,
                 checkpoint_dir: Path | None = None, label: str = ""):
        self.model = model
        self.config = config
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.label = label or model.kind.value
        self.optimizer = Adam(model.named_parameters(), config.learning_rate)
        self._last_good: Path | None = None

    def _save(self, name: str) -> tuple[Path | None, str]:
        if self.checkpoint_dir is None:
            return None, ""
        path = self.checkpoint_dir / name
        return path, save_model(self.model, path)

    def fit(self, windows: WindowSet, val_windows: WindowSet | None = None) -> TrainResult:
        if len(windows) == 0:
            raise DataError(f"[{self.label}] 학습 윈도우가 없습니다")
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        result = TrainResult(model=self.model, best_state=self.model.state_dict())
        best = np.inf
        logger.info("[%s] 학습 시작: 윈도우 %d개, epochs=%d, lr=%g, batch=%d",
                    self.label, len(windows), cfg.epochs, cfg.learning_rate, cfg.batch_size)

        for epoch in range(1, cfg.epochs + 1):
            started = time.perf_counter()
            total, count = 0.0, 0
            try:
                for x, y, future in windows.iter_batches(cfg.batch_size, rng):
                    total += train_step(self.model, self.optimizer, x, y, future) * len(x)
                    count += len(x)
            except NumericalError as e:
                logger.error("[%s] %d 에폭 발산: %s", self.label, epoch, e)
                raise TrainingDiverged(f"[{self.label}] {epoch} 에폭에서 발산: {e}",
                                       last_good_checkpoint=str(self._last_good) if self._last_good else None) from e

            train_loss = total / count
            has_val = val_windows is not None and len(val_windows) > 0
            val_loss = evaluate_loss(self.model, val_windows) if has_val else None
            log = EpochLog(epoch, train_loss, val_loss, time.perf_counter() - started)
            result.loss_curve.append(log)
            logger.info("[%s] epoch %d/%d train %.5f val %s (%.1fs)", self.label, epoch, cfg.epochs,
                        train_loss, "-" if val_loss is None else f"{val_loss:.5f}", log.seconds)

            self._last_good, _ = self._save("last.ckpt")
            score = val_loss if val_loss is not None else train_loss
            if score < best:
                best = score
                result.best_epoch = epoch
                result.best_val_loss = val_loss
                result.best_state = self.model.state_dict()
                result.best_checkpoint, result.best_sha256 = self._save("best.ckpt")

            if cfg.target_train_loss is not None and train_loss < cfg.target_train_loss:
                logger.info("[%s] 목표 학습 손실 %g 도달, %d 에폭에서 종료", self.label, cfg.target_train_loss, epoch)
                break

        result.final_checkpoint, result.checkpoint_sha256 = self._save("final.ckpt")
        if result.best_checkpoint is None and result.final_checkpoint is not None:
            result.best_checkpoint, result.best_sha256 = result.final_checkpoint, result.checkpoint_sha256
        return result


def train(model: ForecastModel, windows: WindowSet, config: TrainConfig,
          val_windows: WindowSet | None = None, checkpoint_dir: Path | None = None) -> TrainResult:
    return Trainer(model, config, checkpoint_dir).fit(windows, val_windows)
