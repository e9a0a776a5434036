"""Results database connection and initialization."""

import logging
import sqlite3
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from config import SchemaVersion
from errors import StoreError

logger = logging.getLogger(__name__)


class DatabaseConnection:
    """Handles connections and schema management for the results database."""

    def __init__(self, path: Path | str):
        """Open (and create if needed) the database.

        Args:
            path: Path to the SQLite database file

        Raises:
            StoreError: If the file cannot be created or its schema is too new
        """
        self.path = Path(path)
        self._ensure_db_directory()
        try:
            self._init_schema()
        except sqlite3.Error as e:
            raise StoreError(f"Cannot open results database {self.path}: {e}")

    def _ensure_db_directory(self) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StoreError(f"Cannot create directory for {self.path}: {e}")

    def _init_schema(self) -> None:
        with self.get_connection() as conn:
            # One row per CLI invocation that produced reports
            conn.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY,
                    command TEXT NOT NULL,
                    seed INTEGER NOT NULL,
                    created_at TEXT NOT NULL,
                    config TEXT NOT NULL,
                    passed INTEGER NOT NULL DEFAULT 0,
                    failed INTEGER NOT NULL DEFAULT 0,
                    inconclusive INTEGER NOT NULL DEFAULT 0
                )
            """)

            conn.execute("""
                CREATE TABLE IF NOT EXISTS reports (
                    id INTEGER PRIMARY KEY,
                    run_id INTEGER NOT NULL,
                    name TEXT NOT NULL,
                    verdict TEXT NOT NULL,
                    target REAL,
                    estimate REAL,
                    tolerance REAL,
                    n INTEGER NOT NULL,
                    runtime REAL NOT NULL,
                    payload TEXT NOT NULL,
                    FOREIGN KEY(run_id) REFERENCES runs(id) ON DELETE CASCADE
                )
            """)

            conn.execute("""
                CREATE TABLE IF NOT EXISTS schema_version (
                    version INTEGER PRIMARY KEY
                )
            """)

            row = conn.execute("SELECT version FROM schema_version LIMIT 1").fetchone()
            if row is None:
                conn.execute("INSERT INTO schema_version (version) VALUES (?)", (SchemaVersion.CURRENT,))
            else:
                self._run_migrations(conn, row["version"])

    def _run_migrations(self, conn: sqlite3.Connection, current_version: int) -> None:
        if current_version < SchemaVersion.MIN_SUPPORTED:
            raise StoreError(
                f"{self.path} has schema version {current_version}, older than {SchemaVersion.MIN_SUPPORTED}"
            )
        if current_version > SchemaVersion.CURRENT:
            raise StoreError(f"{self.path} was written by a newer version (schema {current_version})")
        if current_version < SchemaVersion.CURRENT:
            logger.info("migrating %s from schema %d to %d", self.path, current_version, SchemaVersion.CURRENT)
            conn.execute("UPDATE schema_version SET version = ?", (SchemaVersion.CURRENT,))

    def get_connection(self) -> sqlite3.Connection:
        """Connection with rows returned as dicts and foreign keys enforced."""

        def dict_factory(cursor, row):
            return {col[0]: row[idx] for idx, col in enumerate(cursor.description)}

        conn = sqlite3.connect(self.path)
        conn.row_factory = dict_factory
        conn.execute("PRAGMA foreign_keys = ON")
        return conn

    def execute(self, query: str, params: Tuple[Any, ...] = ()) -> sqlite3.Cursor:
        try:
            with self.get_connection() as conn:
                return conn.execute(query, params)
        except sqlite3.Error as e:
            raise StoreError(f"Query failed on {self.path}: {e}")

    def fetch_all(self, query: str, params: Tuple[Any, ...] = ()) -> List[Dict[str, Any]]:
        try:
            with self.get_connection() as conn:
                return conn.execute(query, params).fetchall()
        except sqlite3.Error as e:
            raise StoreError(f"Query failed on {self.path}: {e}")

    def fetch_one(self, query: str, params: Tuple[Any, ...] = ()) -> Optional[Dict[str, Any]]:
        try:
            with self.get_connection() as conn:
                return conn.execute(query, params).fetchone()
        except sqlite3.Error as e:
            raise StoreError(f"Query failed on {self.path}: {e}")
