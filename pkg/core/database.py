"""SQLite 결과 저장소.

적재 캐시 이력, 학습 실행, 에폭별 손실, 그리드 지표, 벤치마크 시간을 저장하고 조회한다.
"""

import sqlite3
import logging
from datetime import datetime
from pathlib import Path

logger = logging.getLogger(__name__)

DB_PATH = Path("outputs/results.db")


class ResultStore:
    """SQLite 기반 실험 결과 저장소."""

    def __init__(self, db_path: Path = DB_PATH):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_tables()

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(str(self.db_path))
        conn.row_factory = sqlite3.Row
        return conn

    def _init_tables(self):
        """필요한 테이블을 생성한다."""
        with self._connect() as conn:
            conn.executescript("""
                CREATE TABLE IF NOT EXISTS ingest_cache (
                    station TEXT PRIMARY KEY,
                    raw_sha256 TEXT NOT NULL,
                    cache_path TEXT NOT NULL,
                    cache_sha256 TEXT NOT NULL,
                    n_rows INTEGER NOT NULL,
                    dropped TEXT DEFAULT '',
                    updated_at TEXT NOT NULL
                );

                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    timestamp TEXT NOT NULL,
                    kind TEXT NOT NULL,
                    station TEXT NOT NULL,
                    horizon INTEGER NOT NULL,
                    seed INTEGER NOT NULL,
                    epochs INTEGER NOT NULL,
                    final_train_loss REAL,
                    final_val_loss REAL,
                    best_epoch INTEGER DEFAULT 0,
                    checkpoint TEXT DEFAULT '',
                    checkpoint_sha256 TEXT DEFAULT '',
                    status TEXT DEFAULT 'ok',
                    message TEXT DEFAULT ''
                );

                CREATE TABLE IF NOT EXISTS loss_curve (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER NOT NULL,
                    epoch INTEGER NOT NULL,
                    train_loss REAL NOT NULL,
                    val_loss REAL,
                    seconds REAL DEFAULT 0,
                    UNIQUE(run_id, epoch)
                );

                CREATE TABLE IF NOT EXISTS metrics (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    timestamp TEXT NOT NULL,
                    kind TEXT NOT NULL,
                    station TEXT NOT NULL,
                    horizon INTEGER NOT NULL,
                    mse_norm REAL NOT NULL,
                    mae_norm REAL NOT NULL,
                    mse_phys REAL NOT NULL,
                    mae_phys REAL NOT NULL,
                    n_samples INTEGER NOT NULL,
                    wall_time_s REAL DEFAULT 0,
                    best TEXT DEFAULT ''
                );

                CREATE TABLE IF NOT EXISTS benchmarks (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    timestamp TEXT NOT NULL,
                    kernel TEXT NOT NULL,
                    length INTEGER NOT NULL,
                    median_ms REAL NOT NULL,
                    slope REAL
                );

                CREATE INDEX IF NOT EXISTS idx_runs_cell ON runs(kind, station, horizon);
                CREATE INDEX IF NOT EXISTS idx_metrics_cell ON metrics(station, horizon, kind);
            """)

    # ── 적재 캐시 ─────────────────────────────────────────

    def save_ingest(self, station: str, raw_sha256: str, cache_path: str, cache_sha256: str,
                    n_rows: int, dropped: list[str]):
        with self._connect() as conn:
            conn.execute(
                """INSERT OR REPLACE INTO ingest_cache
                   (station, raw_sha256, cache_path, cache_sha256, n_rows, dropped, updated_at)
                   VALUES (?, ?, ?, ?, ?, ?, ?)""",
                (station, raw_sha256, cache_path, cache_sha256, n_rows, ",".join(dropped),
                 datetime.now().isoformat()),
            )
        logger.info("[%s] 적재 캐시 기록: %d행", station, n_rows)

    def get_ingest(self, station: str) -> dict | None:
        with self._connect() as conn:
            row = conn.execute("SELECT * FROM ingest_cache WHERE station = ?", (station,)).fetchone()
        return dict(row) if row else None

    # ── 학습 실행 ─────────────────────────────────────────

    def save_run(
        self,
        kind: str,
        station: str,
        horizon: int,
        seed: int,
        epochs: int,
        final_train_loss: float | None = None,
        final_val_loss: float | None = None,
        best_epoch: int = 0,
        checkpoint: str = "",
        checkpoint_sha256: str = "",
        status: str = "ok",
        message: str = "",
    ) -> int:
        """학습 실행 한 건을 저장하고 run id를 반환한다."""
        with self._connect() as conn:
            cur = conn.execute(
                """INSERT INTO runs (timestamp, kind, station, horizon, seed, epochs, final_train_loss,
                                     final_val_loss, best_epoch, checkpoint, checkpoint_sha256, status, message)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                (datetime.now().isoformat(), kind, station, horizon, seed, epochs, final_train_loss,
                 final_val_loss, best_epoch, checkpoint, checkpoint_sha256, status, message),
            )
            return int(cur.lastrowid)

    def save_loss_curve(self, run_id: int, curve: list[dict]):
        """에폭별 손실 기록. curve 항목: epoch, train_loss, val_loss, seconds."""
        with self._connect() as conn:
            conn.executemany(
                """INSERT OR REPLACE INTO loss_curve (run_id, epoch, train_loss, val_loss, seconds)
                   VALUES (?, ?, ?, ?, ?)""",
                [(run_id, c["epoch"], c["train_loss"], c.get("val_loss"), c.get("seconds", 0.0)) for c in curve],
            )

    def get_runs(self, kind: str | None = None, station: str | None = None) -> list[dict]:
        query, params = "SELECT * FROM runs WHERE 1=1", []
        if kind:
            query += " AND kind = ?"
            params.append(kind)
        if station:
            query += " AND station = ?"
            params.append(station)
        with self._connect() as conn:
            rows = conn.execute(query + " ORDER BY id", params).fetchall()
        return [dict(r) for r in rows]

    def get_loss_curve(self, run_id: int) -> list[dict]:
        with self._connect() as conn:
            rows = conn.execute("SELECT * FROM loss_curve WHERE run_id = ? ORDER BY epoch", (run_id,)).fetchall()
        return [dict(r) for r in rows]

    # ── 그리드 지표 ───────────────────────────────────────

    def save_metrics(self, rows: list[dict]):
        """그리드 결과 행들을 저장한다. 키는 metrics 테이블 열 이름과 같다."""
        now = datetime.now().isoformat()
        with self._connect() as conn:
            conn.executemany(
                """INSERT INTO metrics (timestamp, kind, station, horizon, mse_norm, mae_norm, mse_phys,
                                        mae_phys, n_samples, wall_time_s, best)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                [(now, r["kind"], r["station"], r["horizon"], r["mse_norm"], r["mae_norm"], r["mse_phys"],
                  r["mae_phys"], r["n_samples"], r.get("wall_time_s", 0.0), r.get("best", "")) for r in rows],
            )
        logger.info("지표 %d행 저장", len(rows))

    def get_metrics(self, station: str | None = None) -> list[dict]:
        with self._connect() as conn:
            if station:
                rows = conn.execute(
                    "SELECT * FROM metrics WHERE station = ? ORDER BY id", (station,)
                ).fetchall()
            else:
                rows = conn.execute("SELECT * FROM metrics ORDER BY id").fetchall()
        return [dict(r) for r in rows]

    # ── 벤치마크 ──────────────────────────────────────────

    def save_benchmarks(self, rows: list[dict]):
        now = datetime.now().isoformat()
        with self._connect() as conn:
            conn.executemany(
                "INSERT INTO benchmarks (timestamp, kernel, length, median_ms, slope) VALUES (?, ?, ?, ?, ?)",
                [(now, r["kernel"], r["L"], r["median_ms"], r.get("slope")) for r in rows],
            )

    def get_benchmarks(self, kernel: str | None = None) -> list[dict]:
        with self._connect() as conn:
            if kernel:
                rows = conn.execute("SELECT * FROM benchmarks WHERE kernel = ? ORDER BY id", (kernel,)).fetchall()
            else:
                rows = conn.execute("SELECT * FROM benchmarks ORDER BY id").fetchall()
        return [dict(r) for r in rows]
