"""파라미터 체크포인트 파일 형식.

리틀엔디언 바이너리:
    MAGIC(8) | version u32 | header_len u32 | header(JSON, utf-8)
    | n_entries u32 | 항목 반복: key_len u16, key(utf-8), ndim u8, dims u32×ndim, data f64×prod(dims)

header는 모델 명세(ModelSpec) 등 부가 정보를 담는 JSON 객체다.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = b"SOILCKPT"
CHECKPOINT_VERSION = 1


def save_tensors(path: Path, tensors: dict[str, np.ndarray], header: dict | None = None) -> str:
    """텐서 맵을 저장하고 파일 sha256을 반환한다. 키 순서는 그대로 보존된다."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = json.dumps(header or {}, sort_keys=True).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(head)), head,
              struct.pack("<I", len(tensors))]
    for key, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        kb = key.encode("utf-8")
        chunks.append(struct.pack("<H", len(kb)) + kb)
        chunks.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr).tobytes())
    payload = b"".join(chunks)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)
    return hashlib.sha256(payload).hexdigest()


def load_tensors(path: Path) -> tuple[dict[str, np.ndarray], dict]:
    """(텐서 맵, header)를 반환한다."""
    raw = Path(path).read_bytes()
    if raw[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"체크포인트 형식이 아닙니다: {path}")
    version, head_len = struct.unpack_from("<II", raw, 8)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"지원하지 않는 체크포인트 버전 {version}: {path}")
    offset = 16
    header = json.loads(raw[offset:offset + head_len].decode("utf-8"))
    offset += head_len
    (count,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (key_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        key = raw[offset:offset + key_len].decode("utf-8")
        offset += key_len
        (ndim,) = struct.unpack_from("<B", raw, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        tensors[key] = np.frombuffer(raw, dtype="<f8", count=n, offset=offset).reshape(shape).astype(np.float64)
        offset += 8 * n
    return tensors, header


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
