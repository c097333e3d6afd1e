"""Validation-stage handlers: minify, combine and impact ranking."""

from pathlib import Path
from typing import List, Optional, Sequence

from ..errors import MissingFile
from ..output import get_logger
from ..patch import Patch, serialize_patch
from ..protocol import ImpactRow, MinimizationResult, combine, defined_improvement, minimize, rank_edit_impacts
from ..session import Session, load_patch_file
from ..util import (
    format_csv,
    format_objectives,
    format_operation_end,
    format_operation_start,
    format_percent,
    format_step,
    format_table,
)

PATCH_GLOBS = ("*.txt", "*.patch")


def _print_result(result: MinimizationResult) -> None:
    print(format_step(f"Baseline: {format_objectives(result.baseline.objectives)}", indent=2))
    print(format_step(f"Full patch: {format_objectives(result.full.objectives)} ({result.full.status.value})", indent=2))
    print(format_step(
        f"Minimized (phase {result.phase}): {format_objectives(result.report.objectives)}, "
        f"{len(result.patch)} edit(s)",
        indent=2,
    ))
    if result.report.is_clean:
        change = defined_improvement(result.baseline, result.report)
        print(format_step(f"Change: {', '.join(format_percent(c) for c in change)}", indent=2))
    for edit in result.patch:
        print(f"    {edit}")


def _print_impacts(
    session: Session, patches: Sequence[Patch], instances: Sequence[str], result: MinimizationResult
) -> List[ImpactRow]:
    """Impact table of the input edits, from the phase-A solo runs."""
    rows = rank_edit_impacts(session.evaluator, patches, instances, solo=result.solo_reports())
    if rows:
        print(format_step("Edit impacts:", indent=2))
        headers = ["edit", "runs"] + [f"{name} %" for name in session.scenario.objectives]
        print(format_table(headers, [row.to_row() for row in rows]))
    return rows


def _write_patch(patch: Patch, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(serialize_patch(patch), encoding="utf-8")
        print(format_step(f"Patch written to: {out}", indent=2))


def minify_patch(
    session: Session, patch_path: str, instances_path: Optional[str] = None, out: Optional[str] = None
) -> dict:
    """Minimize one patch on the validation instances."""
    print(format_operation_start("minify patch"))
    patch = load_patch_file(patch_path)
    instances = session.instances(instances_path)
    print(format_step(f"{len(patch)} edit(s) from {patch_path}, {len(instances)} instance(s)", indent=2))

    result = minimize(session.evaluator, patch, instances)
    _write_patch(result.patch, out)
    _print_result(result)
    impacts = _print_impacts(session, [patch], instances, result)

    print(format_operation_end("minify patch"))
    return {"success": True, "result": result, "impacts": impacts}


def combine_patch_files(
    session: Session,
    patch_paths: Sequence[str],
    instances_path: Optional[str] = None,
    out: Optional[str] = None,
) -> dict:
    """Concatenate patches in the given order and minimize the result."""
    print(format_operation_start("combine patches"))
    patches = []
    for path in patch_paths:
        patch = load_patch_file(path)
        print(format_step(f"{path}: {len(patch)} edit(s)", indent=2))
        patches.append(patch)
    instances = session.instances(instances_path)

    result = combine(session.evaluator, patches, instances)
    _write_patch(result.patch, out)
    _print_result(result)
    impacts = _print_impacts(session, patches, instances, result)

    print(format_operation_end("combine patches"))
    return {"success": True, "result": result, "impacts": impacts}


def collect_patch_files(paths: Sequence[str]) -> List[Path]:
    """Patch files named directly or found (sorted) in named directories."""
    files: List[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            found = sorted({p for pattern in PATCH_GLOBS for p in path.glob(pattern)})
            files.extend(found)
        elif path.exists():
            files.append(path)
        else:
            raise MissingFile(f"Patch file or directory not found: {path}")
    return files


def edit_impacts(
    session: Session,
    patch_paths: Sequence[str],
    instances_path: Optional[str] = None,
    threshold: float = 1.0,
    csv_path: Optional[str] = None,
) -> dict:
    """Rank edits found across runs by occurrence and solo improvement."""
    print(format_operation_start("rank edit impacts"))
    files = collect_patch_files(patch_paths)
    patches = [load_patch_file(str(f)) for f in files]
    instances = session.instances(instances_path)
    print(format_step(f"{len(patches)} patch(es), {len(instances)} instance(s), threshold {threshold}%", indent=2))

    rows = rank_edit_impacts(session.evaluator, patches, instances, threshold=threshold)
    headers = ["edit", "runs"] + [f"{name} %" for name in session.scenario.objectives]
    table_rows = [row.to_row() for row in rows]
    if table_rows:
        print(format_table(headers, table_rows))
    else:
        print(format_step(f"No edit improves by {threshold}% or more", indent=2))

    if csv_path:
        Path(csv_path).write_text(format_csv(headers, table_rows), encoding="utf-8")
        print(format_step(f"CSV written to: {csv_path}", indent=2))

    get_logger().log_entry("impacts", patches=len(patches), rows=len(rows))
    print(format_operation_end("rank edit impacts"))
    return {"success": True, "rows": rows}
