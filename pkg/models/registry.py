"""ModelSpec → 모델 인스턴스, 그리고 모델 체크포인트 저장/복원."""

import logging
from pathlib import Path

import numpy as np

from layers.checkpoint import load_tensors, save_tensors
from models.autoformer import Autoformer
from models.base import ForecastModel, ModelKind, ModelSpec
from models.cnn import CnnForecaster
from models.etsformer import ETSformer
from models.informer import Informer
from models.lstm import LstmForecaster
from models.reformer import Reformer
from models.vanilla import VanillaTransformer

logger = logging.getLogger(__name__)

MODEL_CLASSES: dict[ModelKind, type[ForecastModel]] = {
    ModelKind.VANILLA: VanillaTransformer,
    ModelKind.INFORMER: Informer,
    ModelKind.AUTOFORMER: Autoformer,
    ModelKind.REFORMER: Reformer,
    ModelKind.ETSFORMER: ETSformer,
    ModelKind.LSTM: LstmForecaster,
    ModelKind.CNN: CnnForecaster,
}


def build_model(spec: ModelSpec, seed: int) -> ForecastModel:
    """같은 spec과 seed면 파라미터가 비트 단위로 같다."""
    model = MODEL_CLASSES[spec.kind](spec, np.random.default_rng(seed))
    logger.info("[%s] 모델 생성: 파라미터 %d개 (seed=%d)", spec.kind.value, model.num_parameters(), seed)
    return model


def save_model(model: ForecastModel, path: Path) -> str:
    """파라미터와 ModelSpec 헤더를 저장하고 sha256을 반환한다."""
    header = {"spec": model.spec.model_dump(mode="json")}
    return save_tensors(Path(path), model.state_dict(), header)


def load_model(path: Path) -> ForecastModel:
    tensors, header = load_tensors(Path(path))
    if "spec" not in header:
        raise ValueError(f"{path}: ModelSpec 헤더가 없는 체크포인트입니다")
    spec = ModelSpec.model_validate(header["spec"])
    model = MODEL_CLASSES[spec.kind](spec, np.random.default_rng(0))
    model.load_state_dict(tensors)
    return model
