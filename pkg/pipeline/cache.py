"""정제된 시계열 캐시 (열 단위 바이너리) 와 통계 사이드카(JSON).

캐시 파일 (리틀엔디언):
    MAGIC(8) "SOILSERS" | version u32 | header_len u32 | header(JSON, utf-8)
    | timestamps i64×T (epoch ns) | 열마다 f64×T (결측 = NaN, header의 columns 순서)
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import pandas as pd

from config.stations import TARGET_NAME
from core.errors import DataError
from pipeline.loader import StationSeries

SERIES_MAGIC = b"SOILSERS"
SERIES_VERSION = 1


def file_hash(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_series_cache(path: str | Path, series: StationSeries, raw_sha256: str = "") -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "station_id": series.station_id,
        "columns": series.columns,
        "n_rows": len(series),
        "dropped_features": series.dropped_features,
        "raw_sha256": raw_sha256,
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [SERIES_MAGIC, struct.pack("<II", SERIES_VERSION, len(head)), head,
              np.asarray(series.timestamps.asi8, dtype="<i8").tobytes()]
    values = series.values
    for j in range(values.shape[1]):
        chunks.append(np.ascontiguousarray(values[:, j], dtype="<f8").tobytes())
    payload = b"".join(chunks)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)
    return hashlib.sha256(payload).hexdigest()


def read_cache_header(path: str | Path) -> dict:
    with open(path, "rb") as f:
        prefix = f.read(16)
        if prefix[:8] != SERIES_MAGIC:
            raise DataError(f"시계열 캐시 형식이 아닙니다: {path}")
        version, head_len = struct.unpack("<II", prefix[8:16])
        if version != SERIES_VERSION:
            raise DataError(f"지원하지 않는 캐시 버전 {version}: {path}")
        return json.loads(f.read(head_len).decode("utf-8"))


def read_series_cache(path: str | Path) -> tuple[StationSeries, dict]:
    raw = Path(path).read_bytes()
    header = read_cache_header(path)
    (head_len,) = struct.unpack_from("<I", raw, 12)
    offset = 16 + head_len
    n = header["n_rows"]
    stamps = np.frombuffer(raw, dtype="<i8", count=n, offset=offset)
    offset += 8 * n
    cols = []
    for _ in header["columns"]:
        cols.append(np.frombuffer(raw, dtype="<f8", count=n, offset=offset).astype(np.float64))
        offset += 8 * n
    names = [c for c in header["columns"] if c != TARGET_NAME]
    values = np.column_stack(cols)
    series = StationSeries(
        station_id=header["station_id"],
        timestamps=pd.DatetimeIndex(pd.to_datetime(stamps.astype(np.int64), unit="ns")),
        features=values[:, :len(names)].copy(),
        target=values[:, len(names)].copy(),
        feature_names=names,
        dropped_features=list(header["dropped_features"]),
    )
    return series, header


def write_stats_sidecar(path: str | Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True), encoding="utf-8")


def read_stats_sidecar(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
