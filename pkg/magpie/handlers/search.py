"""Search handler: local and joint search over a scenario's training instances."""

from pathlib import Path
from typing import Optional, Sequence

from ..output import get_logger
from ..patch import EditKind, serialize_patch
from ..protocol import defined_improvement
from ..search import SearchConfig, joint_search, local_search
from ..session import Session
from ..util import format_objectives, format_operation_end, format_operation_start, format_percent, format_step


def run_search(
    session: Session,
    families: Sequence[EditKind],
    budget: Optional[int] = None,
    joint: bool = False,
    instances_path: Optional[str] = None,
    out: Optional[str] = None,
    trace_path: Optional[str] = None,
) -> dict:
    """Search from the empty patch and write the best patch and trace."""
    title = "joint search" if joint else "local search"
    print(format_operation_start(title))
    scenario = session.scenario

    if budget is None:
        budget = scenario.joint_budget if joint else scenario.budget
    config = SearchConfig(
        families=tuple(families),
        budget=budget,
        seed=scenario.seed,
        p_remove=scenario.p_remove,
        accept_equal=scenario.accept_equal,
        special_weight=scenario.special_weight,
    )
    instances = session.instances(instances_path)
    print(format_step(
        f"{len(instances)} instance(s), budget {budget}, seed {config.seed}, "
        f"families {', '.join(k.value for k in config.families)}",
        indent=2,
    ))

    search = joint_search if joint else local_search
    trace = search(session.evaluator, instances, config)

    if out:
        Path(out).write_text(serialize_patch(trace.best_patch), encoding="utf-8")
        print(format_step(f"Patch written to: {out}", indent=2))
    if trace_path:
        Path(trace_path).write_text(trace.to_jsonl(), encoding="utf-8")
        print(format_step(f"Trace written to: {trace_path}", indent=2))

    print(format_step(f"Baseline: {format_objectives(trace.baseline.objectives)}", indent=2))
    print(format_step(
        f"Best: {format_objectives(trace.best_report.objectives)} after {trace.evaluations} "
        f"evaluation(s), {len(trace.accepted_steps())} accepted",
        indent=2,
    ))
    change = defined_improvement(trace.baseline, trace.best_report)
    print(format_step(f"Change: {', '.join(format_percent(c) for c in change)}", indent=2))
    print(format_step(f"Best patch ({len(trace.best_patch)} edit(s)):", indent=2))
    for edit in trace.best_patch:
        print(f"    {edit}")

    get_logger().log_entry(title.replace(" ", "_"), seed=config.seed, **trace.summary())
    print(format_operation_end(title))
    return {"success": True, "trace": trace}
