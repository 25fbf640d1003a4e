"""main.main() 명령 단위 테스트 (종료 코드, 산출물)."""

import json
import logging

import pytest

import main
from config import settings

SYN_ID = "SYN-001"


@pytest.fixture(autouse=True)
def _log_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(settings.logging, "log_dir", str(tmp_path / "logs"))


def _run(*argv) -> int:
    return main.main([str(a) for a in argv])


def test_unknown_model_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        _run("train", "--model", "gru")
    assert exc.value.code == 2


def test_ingest_then_train(tmp_path, small_config_file):
    out = tmp_path / "out"
    assert _run("ingest", "--config", small_config_file, "--out", out) == 0
    assert (out / "cache" / f"{SYN_ID}.series").exists()

    assert _run("train", "--config", small_config_file, "--out", out) == 0
    run_dir = out / "runs" / "lstm" / SYN_ID / "H96"
    assert (run_dir / "loss_curve.csv").exists()

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert f"cache/{SYN_ID}.series" in manifest["artifacts"]
    assert not any(name.endswith(".db") for name in manifest["artifacts"])


def test_second_ingest_reuses_cache(tmp_path, small_config_file, caplog):
    out = tmp_path / "out"
    assert _run("ingest", "--config", small_config_file, "--out", out) == 0
    before = (out / "cache" / f"{SYN_ID}.series").read_bytes()
    with caplog.at_level(logging.INFO):
        assert _run("ingest", "--config", small_config_file, "--out", out) == 0
    assert "캐시 재사용" in caplog.text
    assert (out / "cache" / f"{SYN_ID}.series").read_bytes() == before


def test_train_without_ingest_fails(tmp_path, small_config_file):
    assert _run("train", "--config", small_config_file, "--out", tmp_path / "out") == 1


def test_unknown_config_key_is_usage_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kinds": ["lstm"], "learning_rate": 0.1}), encoding="utf-8")
    assert _run("ingest", "--config", path, "--out", tmp_path / "out") == 2


def test_station_not_in_config(tmp_path, small_config_file):
    assert _run("ingest", "--config", small_config_file, "--station", "XX-None", "--out", tmp_path / "out") == 2


def test_missing_raw_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"stations": [{"id": "NL-Loo", "path": str(tmp_path / "nope.csv")}]}),
                    encoding="utf-8")
    assert _run("ingest", "--config", path, "--out", tmp_path / "out") == 2


def test_gradcheck_bad_instances(tmp_path):
    assert _run("gradcheck", "--instances", "0", "--out", tmp_path / "out") == 2


@pytest.mark.slow
def test_gradcheck_passes(tmp_path):
    out = tmp_path / "out"
    assert _run("gradcheck", "--instances", "2", "--out", out) == 0
    assert (out / "gradcheck.csv").exists()
