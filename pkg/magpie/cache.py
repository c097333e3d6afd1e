"""Digest-keyed fitness cache with an optional append-only JSON-lines file."""

import json
import threading
from pathlib import Path
from typing import Any, Dict, Optional


class FitnessCache:
    """Maps artifact digests to serialized fitness reports.

    Lookups and inserts are thread-safe. With a path, every insert is
    appended to the file and the file is replayed on construction; later
    records for the same digest win.
    """

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path is not None else None
        self._entries: Dict[str, Dict[str, Any]] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, "r", encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    self._entries[record["digest"]] = record["report"]
                except (json.JSONDecodeError, KeyError, TypeError):
                    # a torn last line from an interrupted run
                    continue

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __contains__(self, digest: str) -> bool:
        with self._lock:
            return digest in self._entries

    def get(self, digest: str) -> Optional[Dict[str, Any]]:
        with self._lock:
            entry = self._entries.get(digest)
            return json.loads(json.dumps(entry)) if entry is not None else None

    def put(self, digest: str, report: Dict[str, Any]) -> None:
        with self._lock:
            self._entries[digest] = report
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps({"digest": digest, "report": report}) + "\n")

    def clear(self) -> None:
        with self._lock:
            self._entries = {}
