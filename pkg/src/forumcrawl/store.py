"""Persistence: post records, visited threads, fetch log, raw page archive.

A single SQLite file holds records, the durable visited set, and the fetch
log (WAL mode: the crawl loop writes, the control surface reads). Appends
are idempotent on (thread_url, page_number, ordinal); a thread's posts and
its visited mark commit in one transaction, so a crash never leaves a
half-persisted thread. Raw pages archive as <forum>/<timestamp>_<hash>.html
and censored threads' pages are deleted at discard time.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .crawl import PostRecord
from .fetch import FetchLogEntry

_SCHEMA = """
CREATE TABLE IF NOT EXISTS posts (
    thread_url TEXT NOT NULL,
    page_number INTEGER NOT NULL,
    ordinal INTEGER NOT NULL,
    record TEXT NOT NULL,
    PRIMARY KEY (thread_url, page_number, ordinal)
);
CREATE TABLE IF NOT EXISTS visited (
    thread_url TEXT PRIMARY KEY,
    marked_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS fetch_log (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    url TEXT NOT NULL,
    ts TEXT NOT NULL,
    outcome TEXT NOT NULL
);
"""


class DataStore:
    """Embedded single-file store; one writer, concurrent readers."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._lock = threading.RLock()
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA synchronous=NORMAL")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # --- posts ---

    def append_posts(self, records: Iterable[PostRecord]) -> int:
        """Idempotent append; duplicates by key are silently skipped."""
        with self._lock:
            added = 0
            for record in records:
                cur = self._conn.execute(
                    "INSERT OR IGNORE INTO posts VALUES (?, ?, ?, ?)",
                    (record.thread_url, record.page_number, record.ordinal,
                     json.dumps(record.to_dict(), sort_keys=True)))
                added += cur.rowcount
            self._conn.commit()
            return added

    def commit_thread(self, thread_url: str,
                      records: Iterable[PostRecord]) -> None:
        """Posts plus the durable visited mark, atomically."""
        with self._lock:
            try:
                for record in records:
                    self._conn.execute(
                        "INSERT OR IGNORE INTO posts VALUES (?, ?, ?, ?)",
                        (record.thread_url, record.page_number, record.ordinal,
                         json.dumps(record.to_dict(), sort_keys=True)))
                self._conn.execute(
                    "INSERT OR IGNORE INTO visited VALUES (?, ?)",
                    (thread_url, datetime.now(timezone.utc).isoformat()))
                self._conn.commit()
            except Exception:
                self._conn.rollback()
                raise

    def query(self, thread_url: str) -> list[PostRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT record FROM posts WHERE thread_url = ? "
                "ORDER BY page_number, ordinal", (thread_url,)).fetchall()
        return [PostRecord.from_dict(json.loads(row[0])) for row in rows]

    def all_records(self) -> list[PostRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT record FROM posts "
                "ORDER BY thread_url, page_number, ordinal").fetchall()
        return [PostRecord.from_dict(json.loads(row[0])) for row in rows]

    def post_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM posts").fetchone()[0]

    # --- visited set ---

    def visited_mark(self, thread_url: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR IGNORE INTO visited VALUES (?, ?)",
                (thread_url, datetime.now(timezone.utc).isoformat()))
            self._conn.commit()

    def visited_check(self, thread_url: str) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM visited WHERE thread_url = ?",
                (thread_url,)).fetchone()
        return row is not None

    def visited_all(self) -> set[str]:
        with self._lock:
            rows = self._conn.execute("SELECT thread_url FROM visited").fetchall()
        return {row[0] for row in rows}

    # --- fetch log ---

    def log_fetches(self, entries: Iterable[FetchLogEntry]) -> None:
        with self._lock:
            for entry in entries:
                self._conn.execute(
                    "INSERT INTO fetch_log (url, ts, outcome) VALUES (?, ?, ?)",
                    (entry.url, entry.timestamp.isoformat(), entry.outcome))
            self._conn.commit()

    def fetch_log(self) -> list[tuple[str, str, str]]:
        with self._lock:
            return self._conn.execute(
                "SELECT url, ts, outcome FROM fetch_log ORDER BY seq").fetchall()

    # --- export ---

    def export(self, thread_url: str | None = None) -> Iterator[str]:
        """Newline-delimited JSON records, stable field names, UTF-8."""
        records = (self.query(thread_url) if thread_url
                   else self.all_records())
        for record in records:
            yield json.dumps(record.to_dict(), sort_keys=True,
                             ensure_ascii=False)


class PageArchive:
    """Raw page retention under <root>/<forum>/<timestamp>_<hash>.html."""

    def __init__(self, root: str | Path, forum_id: str,
                 enabled: bool = True) -> None:
        self.root = Path(root) / forum_id
        self.enabled = enabled
        if enabled:
            self.root.mkdir(parents=True, exist_ok=True)

    def archive(self, url: str, raw: bytes) -> str | None:
        if not self.enabled:
            return None
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%f")
        digest = hashlib.sha256(url.encode() + raw).hexdigest()[:12]
        path = self.root / f"{stamp}_{digest}.html"
        path.write_bytes(raw)
        return str(path)

    def archiver(self):
        """Callable suitable for the fetch adapters' archiver hook."""
        return lambda url, raw: self.archive(url, raw)

    def delete(self, paths: Iterable[str]) -> None:
        for path in paths:
            try:
                Path(path).unlink(missing_ok=True)
            except OSError:
                pass

    def files(self) -> list[Path]:
        if not self.root.exists():
            return []
        return sorted(self.root.glob("*.html"))
