"""Structured run logging to timestamped JSON-lines files."""

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from .util import format_step


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class OutputLogger:
    """Collects evaluation, search and stage records for one CLI run."""

    def __init__(self, verbose: bool = False):
        self.verbose = verbose
        self.entries: List[Dict[str, Any]] = []
        self._lock = threading.Lock()

    def log_entry(self, operation: str, error: Optional[str] = None, **fields: Any) -> None:
        """Record one operation; ``fields`` must be JSON-serializable."""
        entry: Dict[str, Any] = {
            "timestamp": _utc_now().isoformat().replace("+00:00", "Z"),
            "operation": operation,
        }
        entry.update(fields)
        if error:
            entry["error"] = error
        with self._lock:
            self.entries.append(entry)

        if self.verbose and operation == "evaluate":
            hit = " (cached)" if entry.get("cache_hit") else ""
            print(format_step(
                f"#{entry.get('ordinal')} {entry.get('status')} {entry.get('objectives')}{hit}",
                indent=4,
            ))

    def write_to_file(self, directory: Path) -> Optional[str]:
        """Write all logged entries to ``<directory>/logs/magpie-<timestamp>.jsonl``."""
        with self._lock:
            entries = list(self.entries)
        if not entries:
            return None

        log_dir = Path(directory) / "logs"
        log_dir.mkdir(parents=True, exist_ok=True)
        filepath = log_dir / f"magpie-{_utc_now().strftime('%Y%m%d_%H%M%S')}.jsonl"
        with open(filepath, "a", encoding="utf-8") as f:
            for entry in entries:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return str(filepath)

    def clear(self) -> None:
        """Clear logged entries."""
        with self._lock:
            self.entries = []


# Global logger instance
_logger: Optional[OutputLogger] = None


def get_logger(verbose: bool = False) -> OutputLogger:
    """Get or create the global logger."""
    global _logger
    if _logger is None:
        _logger = OutputLogger(verbose)
    elif verbose:
        _logger.verbose = True
    return _logger


def reset_logger() -> None:
    """Reset the global logger (for testing)."""
    global _logger
    _logger = None
