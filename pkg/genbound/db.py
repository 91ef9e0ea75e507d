"""SQLite ledger of runs, sweeps and verifications."""

import sqlite3
from datetime import datetime
from typing import Optional

from genbound.config import DB_PATH, ensure_data_dir

SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT NOT NULL,  -- run, sweep, verify:<suite>
    target TEXT NOT NULL,  -- scenario id or suite name
    config_hash TEXT NOT NULL,
    seed INTEGER NOT NULL,
    checks INTEGER NOT NULL,
    violations INTEGER NOT NULL,
    passed INTEGER NOT NULL,
    manifest_path TEXT,
    version TEXT,
    timestamp TEXT NOT NULL,
    created_at TEXT DEFAULT CURRENT_TIMESTAMP
);

CREATE INDEX IF NOT EXISTS idx_runs_timestamp ON runs(timestamp);
CREATE INDEX IF NOT EXISTS idx_runs_command ON runs(command);
"""


def get_db() -> sqlite3.Connection:
    """Get database connection, creating schema if needed."""
    ensure_data_dir()
    db = sqlite3.connect(DB_PATH)
    db.row_factory = sqlite3.Row
    db.executescript(SCHEMA)
    return db


def record_run(
    command: str,
    target: str,
    config_hash: str,
    seed: int,
    checks: int,
    violations: int,
    manifest_path: Optional[str] = None,
    version: Optional[str] = None,
    timestamp: Optional[str] = None,
) -> int:
    """Log one invocation and return its ledger id."""
    db = get_db()
    if timestamp is None:
        timestamp = datetime.now().isoformat()
    cursor = db.execute(
        """
        INSERT INTO runs (command, target, config_hash, seed, checks, violations,
                          passed, manifest_path, version, timestamp)
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """,
        (command, target, config_hash, seed, checks, violations,
         int(violations == 0), manifest_path, version, timestamp),
    )
    db.commit()
    run_id = cursor.lastrowid
    db.close()
    return run_id


def get_runs(
    command: Optional[str] = None,
    failed_only: bool = False,
    limit: int = 20,
) -> list[dict]:
    """Recent ledger rows, newest first."""
    db = get_db()
    query = "SELECT * FROM runs WHERE 1=1"
    params = []

    if command:
        query += " AND command LIKE ?"
        params.append(f"{command}%")
    if failed_only:
        query += " AND passed = 0"

    query += " ORDER BY id DESC LIMIT ?"
    params.append(limit)

    rows = db.execute(query, params).fetchall()
    db.close()
    return [dict(row) for row in rows]
