"""Edit-space enumeration handler."""

from typing import Sequence

import numpy as np

from ..patch import EditKind
from ..session import Session
from ..target import enumerate_edit_space
from ..util import format_operation_end, format_operation_start, format_step, format_table


def enumerate_space(
    session: Session,
    families: Sequence[EditKind],
    list_edits: bool = False,
) -> dict:
    """Print per-family edit counts, optionally every edit."""
    print(format_operation_start("enumerate edit space"))
    scenario = session.scenario

    print(format_step(f"Target files: {', '.join(session.model.files) or '(none)'}", indent=2))
    print(format_step(f"Parameters: {len(session.model.param_space)}", indent=2))

    space = enumerate_edit_space(
        session.model,
        families,
        samples_per_numeric_param=scenario.samples_per_numeric_param,
        rng=np.random.default_rng(scenario.seed),
        special_weight=scenario.special_weight,
    )
    counts = {kind.value: family.count for kind, family in space.items()}
    rows = [[kind, count] for kind, count in counts.items()]
    rows.append(["total", sum(counts.values())])
    print(format_table(["family", "edits"], rows))

    if list_edits:
        for kind, family in space.items():
            print(format_step(f"{kind.value}:", indent=2))
            for edit in family:
                print(f"    {edit}")

    print(format_operation_end("enumerate edit space"))
    return {"success": True, "counts": counts}
