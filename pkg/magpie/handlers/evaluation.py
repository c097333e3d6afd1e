"""Evaluation and report handlers."""

import json
from pathlib import Path
from typing import Optional

from ..errors import MissingFile, ParseError
from ..evaluator import FitnessReport, measure_stability
from ..patch import Patch
from ..protocol import defined_improvement
from ..session import Session, load_patch_file
from ..util import (
    format_json_pretty,
    format_objectives,
    format_operation_end,
    format_operation_start,
    format_percent,
    format_step,
    format_table,
)


def evaluate_patch(
    session: Session,
    patch_path: Optional[str] = None,
    instances_path: Optional[str] = None,
    repeats: int = 1,
    use_cache: bool = True,
    out: Optional[str] = None,
) -> dict:
    """Evaluate a patch (default: the empty patch) and print its FitnessReport."""
    print(format_operation_start("evaluate"))
    patch = load_patch_file(patch_path) if patch_path else Patch()
    instances = session.instances(instances_path, default="test")
    print(format_step(f"{len(patch)} edit(s), {len(instances)} instance(s)", indent=2))

    report = session.evaluator.evaluate(patch, instances, use_cache=use_cache)
    print(format_step(
        f"{report.status.value} {format_objectives(report.objectives)}"
        + (" (cached)" if report.cache_hit else ""),
        indent=2,
    ))
    data = report.to_dict()

    if repeats > 1 and report.is_clean:
        series = [report] + [
            session.evaluator.evaluate(patch, instances, use_cache=False) for _ in range(repeats - 1)
        ]
        failed = [r for r in series if not r.is_clean]
        if failed:
            print(format_step(f"Repeat failed: {failed[0].status.value}", indent=2))
        else:
            stability = measure_stability(series)
            rows = [
                [name, f"{s.mean:.6g}", f"{s.stddev:.6g}", f"{s.cov:.4f}"]
                for name, s in zip(session.scenario.objectives, stability)
            ]
            print(format_table(["objective", "mean", "stddev", "CoV"], rows))
            data["stability"] = [s.to_dict() for s in stability]

    print(format_json_pretty(data))
    if out:
        Path(out).write_text(format_json_pretty(data) + "\n", encoding="utf-8")
        print(format_step(f"Report written to: {out}", indent=2))

    print(format_operation_end("evaluate", success=report.is_clean))
    return {"success": True, "report": report}


def load_report(path: str) -> FitnessReport:
    report_path = Path(path)
    if not report_path.exists():
        raise MissingFile(f"Report file not found: {report_path}")
    try:
        return FitnessReport.from_dict(json.loads(report_path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{report_path} is not a fitness report: {e}") from None


def compare_reports(baseline_path: str, variant_path: str) -> dict:
    """Percentage change of a variant report against a baseline report."""
    print(format_operation_start("report"))
    baseline = load_report(baseline_path)
    variant = load_report(variant_path)

    change = defined_improvement(baseline, variant)
    rows = [
        [f"objective {i}", f"{b:.6g}", f"{v:.6g}", format_percent(c)]
        for i, (b, v, c) in enumerate(zip(baseline.objectives, variant.objectives, change))
    ]
    print(format_table(["objective", "baseline", "variant", "change"], rows))
    print(format_json_pretty({"improvement": list(change)}))

    print(format_operation_end("report"))
    return {"success": True, "improvement": change}
