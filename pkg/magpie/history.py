"""Run history: one JSON line per CLI invocation, kept in the work dir."""

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional


class RunHistory:
    """Manages run history in ``<work_dir>/history.jsonl``."""

    HISTORY_FILENAME = "history.jsonl"

    def __init__(self, work_dir: Path):
        self.history_path = Path(work_dir) / self.HISTORY_FILENAME

    def add_entry(
        self,
        argv: List[str],
        seed: Optional[int],
        scenario_digest: Optional[str],
        version: str,
    ) -> None:
        """Add a command entry to history."""
        entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "argv": argv,
            "seed": seed,
            "scenario_digest": scenario_digest,
            "version": version,
        }

        self.history_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.history_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(entry) + "\n")
