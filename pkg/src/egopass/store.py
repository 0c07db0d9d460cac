"""Append-only event log and session snapshots.

Every authentication decision (pairing, challenge issuance including its
hidden answer, submitted answers, verdicts, state changes) lands in the log
in arrival order, so any session outcome can be audited after the fact.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Optional


class EventLog:
    """JSONL event sink; in-memory only when no path is given."""

    def __init__(self, path: Optional[str | Path] = None):
        self._path = Path(path) if path else None
        self._lock = threading.Lock()
        self._seq = 0
        self.events: list[dict] = []
        if self._path:
            self._path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, kind: str, **payload) -> dict:
        with self._lock:
            self._seq += 1
            event = {"seq": self._seq, "ts": time.time(), "kind": kind, **payload}
            self.events.append(event)
            if self._path:
                with open(self._path, "a") as fh:
                    fh.write(json.dumps(event, sort_keys=True, default=str) + "\n")
            return event

    def of_kind(self, kind: str) -> list[dict]:
        with self._lock:
            return [e for e in self.events if e["kind"] == kind]


class NullLog:
    """Event sink that keeps nothing; for bulk simulation runs."""

    events: list[dict] = []

    def append(self, kind: str, **payload) -> dict:
        return {}

    def of_kind(self, kind: str) -> list[dict]:
        return []


def write_snapshot(path: str | Path, sessions: dict) -> None:
    Path(path).write_text(json.dumps(sessions, sort_keys=True, indent=1, default=str) + "\n")
