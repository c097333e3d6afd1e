"""Shared formatting and utility helpers."""

import csv
import io
import json
import sys
from typing import Any, Iterable, List, Optional, Sequence

# Ensure stdout can handle Unicode on Windows
if sys.stdout.encoding and sys.stdout.encoding.lower() != 'utf-8':
    try:
        sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8')
    except Exception:
        pass


def format_operation_start(title: str) -> str:
    """Format operation start marker."""
    return f"▼ {title}"


def format_operation_end(title: str, success: bool = True) -> str:
    """Format operation end marker."""
    status = "success" if success else "failure"
    return f"▲ {title} ({status})"


def format_step(message: str, indent: int = 2) -> str:
    """Format a step within an operation."""
    prefix = " " * indent
    return f"{prefix}• {message}"


def format_table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Aligned pipe-separated table; empty string when there are no rows."""
    rows = [[str(cell) for cell in row] for row in rows]
    if not rows:
        return ""

    col_widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            col_widths[i] = max(col_widths[i], len(cell))

    header_line = " | ".join(h.ljust(col_widths[i]) for i, h in enumerate(headers))
    lines = [header_line, "-" * len(header_line)]
    for row in rows:
        lines.append(" | ".join(cell.ljust(col_widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)


def format_csv(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buffer.getvalue()


def format_json_compact(data: Any) -> str:
    """Format JSON compactly on a single line (for log lines and traces)."""
    return json.dumps(data, separators=(",", ":"), ensure_ascii=False)


def format_json_pretty(data: Any) -> str:
    """Format JSON with indentation (for display and files)."""
    return json.dumps(data, indent=2, ensure_ascii=False)


def format_objectives(objectives: Optional[Sequence[float]]) -> str:
    if objectives is None:
        return "-"
    return "(" + ", ".join(f"{v:.6g}" for v in objectives) + ")"


def format_percent(value: Optional[float]) -> str:
    """Signed percentage; ``n/a`` when the change is undefined."""
    if value is None:
        return "n/a"
    return f"{value:+.2f}%"


def parse_csv_list(value: Optional[str]) -> List[str]:
    """Split a comma-separated CLI value, dropping blanks."""
    if not value:
        return []
    return [item.strip() for item in value.split(",") if item.strip()]
