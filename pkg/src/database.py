# src/database.py
import json
import sqlite3
import logging
from typing import Dict, Any, List, Sequence

logger = logging.getLogger("src.database")

DB_FILE = "nasim_results.db"

CREATE_RUNS = """
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT,
    settings TEXT,
    n_rows INTEGER,
    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
);
"""

CREATE_ROWS = """
CREATE TABLE IF NOT EXISTS rows (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER REFERENCES runs(id),
    position INTEGER,
    payload TEXT
);
"""


class ResultsDatabase:
    """Registro opcional das linhas CSV emitidas por cada comando"""

    def __init__(self, db_path: str = DB_FILE):
        self.db_path = db_path
        self.conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        self._ensure_schema()
        logger.info(f"✅ Conectado ao banco: {self.db_path}")

    def _ensure_schema(self):
        cur = self.conn.cursor()
        cur.execute(CREATE_RUNS)
        cur.execute(CREATE_ROWS)
        self.conn.commit()
        logger.debug("Tabelas criadas/verificadas com sucesso")

    def save_run(self, command: str, settings: Dict[str, Any],
                 rows: Sequence[Dict[str, Any]]) -> int:
        cur = self.conn.cursor()
        cur.execute("INSERT INTO runs (command, settings, n_rows) VALUES (?, ?, ?)",
                    (command, json.dumps(settings, sort_keys=True, default=str), len(rows)))
        run_id = cur.lastrowid
        cur.executemany("INSERT INTO rows (run_id, position, payload) VALUES (?, ?, ?)",
                        [(run_id, i, json.dumps(row, default=str)) for i, row in enumerate(rows)])
        self.conn.commit()
        logger.info(f"✅ Execução {run_id} salva: {command} ({len(rows)} linhas)")
        return run_id

    def list_runs(self, limit: int = 20) -> List[Dict[str, Any]]:
        cur = self.conn.cursor()
        cur.execute("SELECT id, command, n_rows, created_at FROM runs ORDER BY id DESC LIMIT ?",
                    (limit,))
        return [dict(row) for row in cur.fetchall()]

    def fetch_rows(self, run_id: int) -> List[Dict[str, Any]]:
        cur = self.conn.cursor()
        cur.execute("SELECT payload FROM rows WHERE run_id = ? ORDER BY position", (run_id,))
        return [json.loads(row["payload"]) for row in cur.fetchall()]

    def close(self):
        self.conn.close()
