"""File-backed session, bookmark, and document store.

One JSON document on disk, rewritten atomically (temp file + rename) under
a single-writer lock. Adequate for a single-designer tool; survives process
restarts by construction.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import time
import uuid
from pathlib import Path


class NotFoundError(KeyError):
    pass


class SessionStore:
    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                self._data = json.load(fh)
        else:
            self._data = {"version": 1, "sessions": {}, "documents": {}}
            self._flush()

    def _flush(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".store-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self._data, fh, sort_keys=True)
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # --- sessions ---

    def create_session(self) -> dict:
        with self._lock:
            sid = uuid.uuid4().hex[:12]
            session = {
                "id": sid,
                "created": time.time(),
                "doc_id": None,
                "preferences": None,
                "history": [],
                "bookmarks": [],
            }
            self._data["sessions"][sid] = session
            self._flush()
            return dict(session)

    def get_session(self, sid: str) -> dict:
        session = self._data["sessions"].get(sid)
        if session is None:
            raise NotFoundError(f"unknown session {sid!r}")
        return session

    def record_request(self, sid: str, doc_id, preferences: dict, palettes: list[dict]) -> int:
        with self._lock:
            session = self.get_session(sid)
            session["doc_id"] = doc_id
            session["preferences"] = preferences
            session["history"].append(
                {
                    "preferences": preferences,
                    "palettes": palettes,
                    "chosen": None,
                    "timestamp": time.time(),
                }
            )
            self._flush()
            return len(session["history"]) - 1

    def choose(self, sid: str, history_index: int, palette_index: int) -> None:
        with self._lock:
            session = self.get_session(sid)
            try:
                entry = session["history"][history_index]
            except IndexError:
                raise NotFoundError(f"no history entry {history_index}")
            if not (0 <= palette_index < len(entry["palettes"])):
                raise NotFoundError(f"no palette {palette_index} in that entry")
            entry["chosen"] = palette_index
            self._flush()

    # --- bookmarks ---

    def add_bookmark(self, sid: str, palette: dict) -> dict:
        with self._lock:
            session = self.get_session(sid)
            bookmark = {"id": uuid.uuid4().hex[:12], "palette": palette, "created": time.time()}
            if any(b["id"] == bookmark["id"] for b in session["bookmarks"]):
                raise ValueError("bookmark id collision")
            session["bookmarks"].append(bookmark)
            self._flush()
            return dict(bookmark)

    def list_bookmarks(self, sid: str) -> list[dict]:
        return list(self.get_session(sid)["bookmarks"])

    def delete_bookmark(self, sid: str, bid: str) -> None:
        with self._lock:
            session = self.get_session(sid)
            before = len(session["bookmarks"])
            session["bookmarks"] = [b for b in session["bookmarks"] if b["id"] != bid]
            if len(session["bookmarks"]) == before:
                raise NotFoundError(f"unknown bookmark {bid!r}")
            self._flush()

    # --- documents ---

    def save_document(self, payload: dict) -> str:
        with self._lock:
            doc_id = uuid.uuid4().hex[:12]
            self._data["documents"][doc_id] = payload
            self._flush()
            return doc_id

    def get_document(self, doc_id: str) -> dict:
        doc = self._data["documents"].get(doc_id)
        if doc is None:
            raise NotFoundError(f"unknown document {doc_id!r}")
        return doc
