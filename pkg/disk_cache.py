"""
Persistent cache store using SQLite3 directly
Keeps delta tables and moment values between runs when a cache directory is configured
"""

import json
import os
import sqlite3
import threading
import logging
from typing import Any, Dict, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

CACHE_DIR_ENV = 'KLOOSTERMAN_CACHE_DIR'
CACHE_FILE_NAME = 'kloosterman_cache.db'


class CacheStore:
    """Key/value store backed by one sqlite file; values are JSON text"""

    def __init__(self, cache_dir: str):
        os.makedirs(cache_dir, exist_ok=True)
        self.db_path = os.path.join(cache_dir, CACHE_FILE_NAME)
        self.lock = threading.Lock()
        self.conn = None
        self.init_tables()

    def connect(self):
        """Connect to the database"""
        self.conn = sqlite3.connect(self.db_path)
        self.conn.row_factory = sqlite3.Row
        return self.conn

    def close(self):
        """Close the database connection"""
        if self.conn:
            self.conn.close()
            self.conn = None

    def init_tables(self):
        """Initialize the cache table"""
        with self.lock:
            try:
                conn = self.connect()
                conn.execute('''
                    CREATE TABLE IF NOT EXISTS cache_entries (
                        namespace TEXT NOT NULL,
                        cache_key TEXT NOT NULL,
                        value TEXT NOT NULL,
                        created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                        PRIMARY KEY (namespace, cache_key)
                    )
                ''')
                conn.commit()
                logger.info(f"Cache store ready at {self.db_path}")
            finally:
                self.close()

    def get(self, namespace: str, cache_key: str) -> Optional[Any]:
        """Load a stored value, or None when absent"""
        with self.lock:
            try:
                conn = self.connect()
                row = conn.execute(
                    'SELECT value FROM cache_entries WHERE namespace = ? AND cache_key = ?',
                    (namespace, cache_key)
                ).fetchone()
            except sqlite3.Error as e:
                logger.error(f"Cache store read failed for {cache_key}: {e}")
                return None
            finally:
                self.close()
        if row is None:
            return None
        return json.loads(row['value'])

    def put(self, namespace: str, cache_key: str, value: Any) -> None:
        """Store a JSON-compatible value, replacing any previous entry"""
        payload = json.dumps(value, sort_keys=True)
        with self.lock:
            try:
                conn = self.connect()
                conn.execute(
                    'INSERT OR REPLACE INTO cache_entries (namespace, cache_key, value) VALUES (?, ?, ?)',
                    (namespace, cache_key, payload)
                )
                conn.commit()
            except sqlite3.Error as e:
                logger.error(f"Cache store write failed for {cache_key}: {e}")
            finally:
                self.close()

    def clear(self) -> int:
        """Delete every entry and return how many were removed"""
        with self.lock:
            try:
                conn = self.connect()
                removed = conn.execute('DELETE FROM cache_entries').rowcount
                conn.commit()
                return removed
            finally:
                self.close()

    def get_stats(self) -> Dict[str, Any]:
        """Entry counts per namespace"""
        with self.lock:
            try:
                conn = self.connect()
                rows = conn.execute(
                    'SELECT namespace, COUNT(*) AS entries FROM cache_entries GROUP BY namespace ORDER BY namespace'
                ).fetchall()
            finally:
                self.close()
        namespaces = {row['namespace']: row['entries'] for row in rows}
        return {
            'path': self.db_path,
            'namespaces': namespaces,
            'total_entries': sum(namespaces.values())
        }


_stores: Dict[str, CacheStore] = {}
_stores_lock = threading.Lock()


def get_cache_store() -> Optional[CacheStore]:
    """Return the store for the configured cache directory, or None when caching to disk is off"""
    load_dotenv()
    cache_dir = os.getenv(CACHE_DIR_ENV)
    if not cache_dir:
        return None
    with _stores_lock:
        if cache_dir not in _stores:
            _stores[cache_dir] = CacheStore(cache_dir)
        return _stores[cache_dir]


def encode_int_map(values: Dict[int, int]) -> Dict[str, str]:
    """Big integers travel as decimal strings"""
    return {str(k): str(v) for k, v in values.items()}


def decode_int_map(payload: Dict[str, str]) -> Dict[int, int]:
    return {int(k): int(v) for k, v in payload.items()}


def encode_int(value: int) -> str:
    return str(value)


def decode_int(payload: str) -> int:
    return int(payload)
