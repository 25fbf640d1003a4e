"""공용 픽스처: 합성 관측소, 소형 모델 설정."""

import numpy as np
import pytest

from pipeline.cleaning import clean
from pipeline.loader import load_csv
from pipeline.synthetic import write_synthetic_csv
from training.diagnostics import tiny_spec

SYN_ID = "SYN-001"


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def synthetic_csv(tmp_path):
    return write_synthetic_csv(tmp_path / "raw" / f"{SYN_ID}.csv", station_id=SYN_ID, n_rows=1000, seed=0)


@pytest.fixture
def synthetic_series(synthetic_csv):
    return clean(load_csv(synthetic_csv, station_id=SYN_ID))


@pytest.fixture
def tiny():
    """tiny_spec(kind, **overrides) 팩토리."""
    return tiny_spec


@pytest.fixture
def small_config_file(tmp_path):
    """빠른 CLI 테스트용 설정: 합성 관측소 1곳, 소형 LSTM, 1 에폭."""
    import json

    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "stations": [{"id": SYN_ID, "synthetic": {"rows": 600}}],
        "kinds": ["lstm"],
        "horizons": [96],
        "model_defaults": {"lookback": 24, "label_len": 12},
        "models": {"lstm": {"lstm": {"units": 4, "n_layers": 1}}},
        "training": {"baseline": {"epochs": 1, "batch_size": 64}},
        "stride": 8,
    }), encoding="utf-8")
    return path
