"""First-improvement local search over patches."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BaselineFailure, ConfigError, EmptySpace
from .evaluator import Evaluator, FitnessReport, compare
from .output import get_logger
from .params import DEFAULT_SPECIAL_WEIGHT
from .patch import ALL_KINDS, EditKind, Patch
from .target import has_edits, sample_random_edit
from .util import format_json_compact

APPEND = "append"
REMOVE = "remove"


@dataclass(frozen=True)
class SearchConfig:
    families: Tuple[EditKind, ...] = ALL_KINDS
    budget: int = 1000
    seed: int = 0
    p_remove: float = 0.5
    accept_equal: bool = True
    special_weight: float = DEFAULT_SPECIAL_WEIGHT

    def __post_init__(self) -> None:
        try:
            families = tuple(dict.fromkeys(EditKind.parse(f) for f in self.families))
        except ValueError as e:
            raise ConfigError("families", str(e)) from None
        object.__setattr__(self, "families", families)
        if not self.families:
            raise ConfigError("families", "at least one edit family must be enabled")
        if self.budget < 0:
            raise ConfigError("budget", f"must be >= 0, got {self.budget}")
        if not 0.0 <= self.p_remove < 1.0:
            raise ConfigError("p_remove", f"must be in [0, 1), got {self.p_remove}")


@dataclass(frozen=True)
class SearchStep:
    step: int
    action: str
    kind: str
    edit: str
    status: str
    objectives: Optional[List[float]]
    accepted: bool
    patch_size: int


@dataclass
class SearchTrace:
    """Every mutant tried, plus the best patch found."""

    baseline: FitnessReport
    best_patch: Patch = field(default_factory=Patch)
    best_report: Optional[FitnessReport] = None
    steps: List[SearchStep] = field(default_factory=list)
    mode: str = "local"

    @property
    def evaluations(self) -> int:
        return len(self.steps)

    def accepted_steps(self) -> List[SearchStep]:
        return [s for s in self.steps if s.accepted]

    def to_jsonl(self) -> str:
        """Deterministic for a given seed: no timings, no cache flags."""
        return "".join(format_json_compact(asdict(s)) + "\n" for s in self.steps)

    def summary(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "evaluations": self.evaluations,
            "accepted": len(self.accepted_steps()),
            "baseline": list(self.baseline.objectives),
            "best": list(self.best_report.objectives),
            "best_patch": str(self.best_patch),
        }


def _usable_families(evaluator: Evaluator, families: Iterable[EditKind]) -> List[EditKind]:
    return [kind for kind in families if has_edits(evaluator.model, kind)]


def local_search(
    evaluator: Evaluator,
    instances: Sequence[str],
    config: SearchConfig,
    rng: Optional[np.random.Generator] = None,
    mode: str = "local",
) -> SearchTrace:
    """First-improvement local search from the empty patch.

    Each step removes a random edit of the best patch (probability
    ``p_remove``, only when it is non-empty) or appends a random edit whose
    kind is drawn uniformly from the enabled families. Every mutant
    evaluation is charged to the budget, cache hits included; the baseline
    is not.
    """
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    logger = get_logger()

    baseline = evaluator.baseline(instances)
    if not baseline.is_clean:
        raise BaselineFailure(
            f"The unmodified program is {baseline.status.value} on the training instances"
            + (f": {baseline.detail}" if baseline.detail else "")
        )

    trace = SearchTrace(baseline=baseline, best_report=baseline, mode=mode)
    if config.budget == 0:
        return trace

    families = _usable_families(evaluator, config.families)
    if not families:
        raise EmptySpace(
            "None of the enabled families has an edit on this target: "
            + ", ".join(k.value for k in config.families)
        )

    best_patch, best = Patch(), baseline
    for step in range(1, config.budget + 1):
        if len(best_patch) > 0 and rng.random() < config.p_remove:
            index = int(rng.integers(len(best_patch)))
            action, edit = REMOVE, best_patch[index]
            mutant = best_patch.without(index)
        else:
            kind = families[int(rng.integers(len(families)))]
            edit = sample_random_edit(evaluator.model, kind, rng, config.special_weight)
            action, mutant = APPEND, best_patch.append(edit)

        report = evaluator.evaluate(mutant, instances)
        order = compare(report, best)
        accepted = order < 0 or (config.accept_equal and order == 0)
        if accepted:
            best_patch, best = mutant, report

        record = SearchStep(
            step=step,
            action=action,
            kind=edit.kind.value,
            edit=str(edit),
            status=report.status.value,
            objectives=list(report.objectives) if report.objectives is not None else None,
            accepted=accepted,
            patch_size=len(best_patch),
        )
        trace.steps.append(record)
        logger.log_entry("search_step", mode=mode, **asdict(record))

    trace.best_patch, trace.best_report = best_patch, best
    return trace


def joint_search(
    evaluator: Evaluator,
    instances: Sequence[str],
    config: SearchConfig,
    rng: Optional[np.random.Generator] = None,
) -> SearchTrace:
    """Local search over the union of the enabled families.

    Drawing the kind first and then an edit within it is the whole joint
    mechanism, so this is ``local_search`` under its own name.
    """
    return local_search(evaluator, instances, config, rng, mode="joint")
