"""Campaign handler: k-fold search and validation, then the test stage."""

from pathlib import Path
from typing import Optional, Sequence

from ..output import get_logger
from ..patch import EditKind, serialize_patch
from ..protocol import CampaignConfig, run_campaign
from ..search import SearchConfig
from ..session import Session
from ..util import (
    format_json_pretty,
    format_objectives,
    format_operation_end,
    format_operation_start,
    format_percent,
    format_step,
    format_table,
)


def run(
    session: Session,
    families: Sequence[EditKind],
    k: Optional[int] = None,
    budget: Optional[int] = None,
    joint: bool = False,
    test_repeats: Optional[int] = None,
    out: Optional[str] = None,
    patch_out: Optional[str] = None,
) -> dict:
    print(format_operation_start("campaign"))
    scenario = session.scenario
    if budget is None:
        budget = scenario.joint_budget if joint else scenario.budget
    config = CampaignConfig(
        search=SearchConfig(
            families=tuple(families),
            budget=budget,
            seed=scenario.seed,
            p_remove=scenario.p_remove,
            accept_equal=scenario.accept_equal,
            special_weight=scenario.special_weight,
        ),
        k=k if k is not None else scenario.k,
        test_repeats=test_repeats if test_repeats is not None else scenario.test_repeats,
        joint=joint,
    )
    train = scenario.train_instances()
    test = scenario.test_instances()
    print(format_step(
        f"{len(train)} training / {len(test)} test instance(s), k={config.k}, "
        f"budget {budget} per fold, seed {scenario.seed}",
        indent=2,
    ))

    result = run_campaign(session.evaluator, train, test, config)

    rows = [
        [
            outcome.fold.index,
            len(outcome.fold.training),
            len(outcome.fold.validation),
            len(outcome.trace.best_patch),
            len(outcome.minimized.patch),
            outcome.minimized.phase,
            ", ".join(f"{r:.4f}" for r in outcome.ratio),
        ]
        for outcome in result.folds
    ]
    print(format_table(["fold", "train", "valid", "searched", "minimized", "phase", "ratio"], rows))

    selected = "none (empty patch)" if result.selected_fold is None else f"fold {result.selected_fold}"
    print(format_step(f"Selected: {selected}, {len(result.selected)} edit(s)", indent=2))
    for edit in result.selected:
        print(f"    {edit}")
    print(format_step(f"Test baseline: {format_objectives(result.baseline_test_report.objectives)}", indent=2))
    print(format_step(
        f"Test selected: {result.test_report.status.value} {format_objectives(result.test_report.objectives)}",
        indent=2,
    ))
    if result.improvement is not None:
        print(format_step(f"Change: {', '.join(format_percent(c) for c in result.improvement)}", indent=2))

    data = result.to_dict()
    out_path = Path(out) if out else Path(scenario.work_dir) / "campaign.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(format_json_pretty(data) + "\n", encoding="utf-8")
    print(format_step(f"Result written to: {out_path}", indent=2))
    if patch_out:
        Path(patch_out).write_text(serialize_patch(result.selected), encoding="utf-8")
        print(format_step(f"Patch written to: {patch_out}", indent=2))

    get_logger().log_entry(
        "campaign",
        seed=scenario.seed,
        selected_fold=result.selected_fold,
        selected_patch=str(result.selected),
        improvement=data["improvement"],
    )
    print(format_operation_end("campaign", success=result.test_report.is_clean))
    return {"success": True, "result": result}
