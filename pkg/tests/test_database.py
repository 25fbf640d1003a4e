"""SQLite 결과 저장소."""

import pytest

from core.database import ResultStore


@pytest.fixture
def store(tmp_path):
    return ResultStore(tmp_path / "db" / "results.db")


def test_ingest_upsert(store):
    assert store.get_ingest("NL-Loo") is None
    store.save_ingest("NL-Loo", "aa", "cache/NL-Loo.series", "bb", 100, [])
    store.save_ingest("NL-Loo", "cc", "cache/NL-Loo.series", "dd", 120, ["lw_rad", "precip"])
    row = store.get_ingest("NL-Loo")
    assert (row["raw_sha256"], row["n_rows"], row["dropped"]) == ("cc", 120, "lw_rad,precip")


def test_runs_and_loss_curve(store):
    first = store.save_run("lstm", "NL-Loo", 96, seed=42, epochs=2, final_train_loss=0.3, final_val_loss=0.4)
    second = store.save_run("cnn", "NL-Loo", 96, seed=42, epochs=0, status="diverged", message="nan")
    assert second > first
    store.save_loss_curve(first, [{"epoch": 1, "train_loss": 0.5, "val_loss": None},
                                  {"epoch": 2, "train_loss": 0.3, "val_loss": 0.4, "seconds": 1.5}])
    curve = store.get_loss_curve(first)
    assert [c["epoch"] for c in curve] == [1, 2]
    assert curve[0]["val_loss"] is None and curve[1]["seconds"] == 1.5
    assert [r["kind"] for r in store.get_runs(station="NL-Loo")] == ["lstm", "cnn"]
    assert store.get_runs(kind="cnn")[0]["status"] == "diverged"


def test_metrics_and_benchmarks(store):
    store.save_metrics([
        {"kind": "lstm", "station": "A", "horizon": 96, "mse_norm": 0.1, "mae_norm": 0.2,
         "mse_phys": 1.0, "mae_phys": 0.8, "n_samples": 10, "best": "mse_norm"},
        {"kind": "cnn", "station": "B", "horizon": 96, "mse_norm": 0.3, "mae_norm": 0.4,
         "mse_phys": 2.0, "mae_phys": 1.1, "n_samples": 10},
    ])
    assert len(store.get_metrics()) == 2
    assert store.get_metrics("A")[0]["best"] == "mse_norm"
    store.save_benchmarks([{"kernel": "full", "L": 256, "median_ms": 3.0, "slope": 2.0},
                           {"kernel": "lsh", "L": 256, "median_ms": 1.0}])
    assert store.get_benchmarks("lsh")[0]["slope"] is None
    assert len(store.get_benchmarks()) == 2
