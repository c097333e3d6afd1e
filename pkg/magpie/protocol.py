"""Train/validate/test protocol: folds, minimization, combination, reporting."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ArityMismatch,
    BaselineFailure,
    CombineError,
    FoldError,
    ScenarioError,
    ZeroBaseline,
)
from .evaluator import Evaluator, FitnessReport, Stability, compare, fitness_key, measure_stability
from .output import get_logger
from .patch import Edit, Patch
from .search import SearchConfig, SearchTrace, joint_search, local_search

DEFAULT_K = 10
TRAINING_CAP = 10
DEFAULT_IMPACT_THRESHOLD = 1.0


# -- folds -------------------------------------------------------------------


@dataclass(frozen=True)
class Fold:
    index: int
    members: Tuple[str, ...]
    training: Tuple[str, ...]
    validation: Tuple[str, ...]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    order: Tuple[str, ...]
    folds: Tuple[Fold, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [
                {"index": f.index, "training": list(f.training), "validation_size": len(f.validation)}
                for f in self.folds
            ],
        }


def make_fold_plan(
    instances: Sequence[str], k: int = DEFAULT_K, seed: int = 0, cap: int = TRAINING_CAP
) -> FoldPlan:
    """Seeded shuffle split into ``k`` near-equal folds.

    Fold i trains on its first ``min(cap, |fold i|)`` instances and validates
    on every instance of the other folds.
    """
    n = len(instances)
    if k < 2:
        raise FoldError(f"k must be at least 2, got {k}")
    if k > n:
        raise FoldError(f"k={k} exceeds the {n} training instances")

    rng = np.random.default_rng(seed)
    order = tuple(instances[i] for i in rng.permutation(n))
    chunks = np.array_split(np.arange(n), k)
    folds = []
    for index, chunk in enumerate(chunks):
        members = tuple(order[i] for i in chunk)
        own = set(int(i) for i in chunk)
        validation = tuple(order[i] for i in range(n) if i not in own)
        folds.append(Fold(index, members, members[:cap], validation))
    return FoldPlan(k=k, seed=seed, order=order, folds=tuple(folds))


# -- minimization -----------------------------------------------------------


@dataclass(frozen=True)
class SoloResult:
    edit: Edit
    report: FitnessReport


@dataclass(frozen=True)
class MinimizationResult:
    patch: Patch
    report: FitnessReport
    baseline: FitnessReport
    full: FitnessReport
    solo: Tuple[SoloResult, ...] = ()
    phase: str = "A"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "patch": str(self.patch),
            "phase": self.phase,
            "objectives": list(self.report.objectives) if self.report.objectives is not None else None,
            "full_objectives": list(self.full.objectives) if self.full.objectives is not None else None,
            "baseline": list(self.baseline.objectives),
        }

    def solo_reports(self) -> Dict[Edit, FitnessReport]:
        """Phase-A solo fitness of every distinct edit."""
        return {entry.edit: entry.report for entry in self.solo}


def _require_clean_baseline(evaluator: Evaluator, instances: Sequence[str]) -> FitnessReport:
    baseline = evaluator.baseline(instances)
    if not baseline.is_clean:
        raise BaselineFailure(
            f"The unmodified program is {baseline.status.value} on the validation instances"
        )
    return baseline


def evaluate_solo(evaluator: Evaluator, patch: Patch, instances: Sequence[str]) -> List[SoloResult]:
    """Each edit of ``patch`` evaluated on its own, in patch order."""
    edits = list(patch)
    if evaluator.process_slots > 1 and len(edits) > 1:
        with ThreadPoolExecutor(max_workers=evaluator.process_slots) as pool:
            reports = list(pool.map(lambda e: evaluator.evaluate(Patch([e]), instances), edits))
    else:
        reports = [evaluator.evaluate(Patch([e]), instances) for e in edits]
    return [SoloResult(e, r) for e, r in zip(edits, reports)]


def _rebuild(
    evaluator: Evaluator, solo: List[SoloResult], baseline: FitnessReport, instances: Sequence[str]
) -> Tuple[Patch, FitnessReport]:
    ranked = sorted(solo, key=lambda s: fitness_key(s.report))
    current, current_report = Patch(), baseline
    for entry in ranked:
        candidate = current.append(entry.edit)
        report = evaluator.evaluate(candidate, instances)
        if compare(report, current_report) < 0:
            current, current_report = candidate, report
    return current, current_report


def _removal_sweeps(
    evaluator: Evaluator, patch: Patch, report: FitnessReport, instances: Sequence[str]
) -> Tuple[Patch, FitnessReport]:
    current, current_report = patch, report
    removed = True
    while removed:
        removed = False
        index = 0
        while index < len(current):
            candidate = current.without(index)
            candidate_report = evaluator.evaluate(candidate, instances)
            if compare(candidate_report, current_report) <= 0:
                current, current_report = candidate, candidate_report
                removed = True
            else:
                index += 1
    return current, current_report


def minimize(evaluator: Evaluator, patch: Patch, instances: Sequence[str]) -> MinimizationResult:
    """Reduce ``patch`` to the edits that contribute on ``instances``.

    Phase A ranks the edits by solo fitness and rebuilds from empty, keeping
    an edit only if it strictly improves. When the full patch beats that
    rebuild, phase B sweeps single-edit removals over the full patch instead,
    keeping every removal that does not worsen fitness. The better candidate
    wins; ties go to fewer edits, then to phase A.
    """
    baseline = _require_clean_baseline(evaluator, instances)
    if len(patch) == 0:
        return MinimizationResult(Patch(), baseline, baseline, baseline)

    full = evaluator.evaluate(patch, instances)
    solo = evaluate_solo(evaluator, patch, instances)
    a_patch, a_report = _rebuild(evaluator, solo, baseline, instances)
    result = MinimizationResult(a_patch, a_report, baseline, full, tuple(solo), "A")

    if compare(full, a_report) < 0:
        b_patch, b_report = _removal_sweeps(evaluator, patch, full, instances)
        order = compare(b_report, a_report)
        if order < 0 or (order == 0 and len(b_patch) < len(a_patch)):
            result = replace(result, patch=b_patch, report=b_report, phase="B")

    get_logger().log_entry(
        "minimize",
        input_size=len(patch),
        output_size=len(result.patch),
        phase=result.phase,
        patch=str(result.patch),
    )
    return result


def minimize_patch(evaluator: Evaluator, patch: Patch, instances: Sequence[str]) -> Patch:
    return minimize(evaluator, patch, instances).patch


def combine(evaluator: Evaluator, patches: Sequence[Patch], instances: Sequence[str]) -> MinimizationResult:
    """Minimize the in-order concatenation of two or more patches."""
    if len(patches) < 2:
        raise CombineError(f"Combining needs at least two patches, got {len(patches)}")
    joined = Patch()
    for patch in patches:
        joined = joined + patch
    return minimize(evaluator, joined, instances)


def combine_patches(evaluator: Evaluator, patches: Sequence[Patch], instances: Sequence[str]) -> Patch:
    return combine(evaluator, patches, instances).patch


# -- reporting --------------------------------------------------------------


def improvement_percent(baseline: float, variant: float) -> float:
    if baseline == 0:
        raise ZeroBaseline("Relative improvement is undefined for a zero baseline")
    return round((variant - baseline) / baseline * 100.0, 2)


def _paired_objectives(baseline: FitnessReport, variant: FitnessReport) -> List[Tuple[float, float]]:
    for label, report in (("baseline", baseline), ("variant", variant)):
        if not report.is_clean:
            raise ValueError(f"The {label} report is {report.status.value}, not CLEAN")
    if len(baseline.objectives) != len(variant.objectives):
        raise ArityMismatch(
            f"Baseline has {len(baseline.objectives)} objectives, variant {len(variant.objectives)}"
        )
    return list(zip(baseline.objectives, variant.objectives))


def report_improvement(baseline: FitnessReport, variant: FitnessReport) -> Tuple[float, ...]:
    """Per-objective percentage change, two decimals; negative is better."""
    return tuple(improvement_percent(b, v) for b, v in _paired_objectives(baseline, variant))


def defined_improvement(baseline: FitnessReport, variant: FitnessReport) -> Tuple[Optional[float], ...]:
    """``report_improvement`` with None for objectives whose baseline is zero."""
    return tuple(
        None if b == 0 else improvement_percent(b, v) for b, v in _paired_objectives(baseline, variant)
    )


@dataclass(frozen=True)
class ImpactRow:
    edit: Edit
    occurrences: int
    improvement: Tuple[Optional[float], ...]

    def to_row(self) -> List[str]:
        changes = ["n/a" if v is None else f"{v:.2f}" for v in self.improvement]
        return [str(self.edit), str(self.occurrences)] + changes

    def sort_key(self) -> Tuple:
        return (-self.occurrences, tuple(math.inf if v is None else v for v in self.improvement))


def rank_edit_impacts(
    evaluator: Evaluator,
    patches: Sequence[Patch],
    instances: Sequence[str],
    threshold: float = DEFAULT_IMPACT_THRESHOLD,
    solo: Optional[Mapping[Edit, FitnessReport]] = None,
) -> List[ImpactRow]:
    """Edits found across runs with their solo improvement over the baseline.

    An edit counts once per patch it occurs in. Rows whose first-objective
    improvement is undefined or smaller than ``threshold`` percent, or whose solo
    run is not CLEAN, are dropped. Sorted by occurrences, then improvement.
    """
    if not patches:
        raise ValueError("No patches to rank")
    baseline = _require_clean_baseline(evaluator, instances)

    occurrences: Dict[Edit, int] = {}
    for patch in patches:
        for edit in dict.fromkeys(patch):
            occurrences[edit] = occurrences.get(edit, 0) + 1

    known = dict(solo or {})
    missing = [e for e in occurrences if e not in known]
    for entry in evaluate_solo(evaluator, Patch(missing), instances):
        known[entry.edit] = entry.report

    rows = []
    for edit, count in occurrences.items():
        report = known[edit]
        if not report.is_clean:
            continue
        delta = defined_improvement(baseline, report)
        if delta[0] is not None and -delta[0] >= threshold:
            rows.append(ImpactRow(edit, count, delta))
    rows.sort(key=ImpactRow.sort_key)
    return rows


# -- campaign ---------------------------------------------------------------


@dataclass(frozen=True)
class CampaignConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    k: int = DEFAULT_K
    cap: int = TRAINING_CAP
    test_repeats: int = 1
    joint: bool = False


@dataclass
class FoldOutcome:
    fold: Fold
    trace: SearchTrace
    minimized: MinimizationResult
    ratio: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.fold.index,
            "training": list(self.fold.training),
            "search": self.trace.summary(),
            "minimized": self.minimized.to_dict(),
            "validation_ratio": [r if math.isfinite(r) else None for r in self.ratio],
        }


@dataclass
class CampaignResult:
    plan: FoldPlan
    folds: List[FoldOutcome]
    selected: Patch
    selected_fold: Optional[int]
    test_report: FitnessReport
    baseline_test_report: FitnessReport
    improvement: Optional[Tuple[Optional[float], ...]]
    test_stability: Optional[Dict[str, List[Stability]]] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "plan": self.plan.to_dict(),
            "folds": [f.to_dict() for f in self.folds],
            "selected_fold": self.selected_fold,
            "selected_patch": str(self.selected),
            "test": self.test_report.to_dict(),
            "baseline_test": self.baseline_test_report.to_dict(),
            "improvement": list(self.improvement) if self.improvement is not None else None,
        }
        if self.test_stability is not None:
            data["test_stability"] = {
                role: [s.to_dict() for s in values] for role, values in self.test_stability.items()
            }
        return data


def _ratio(report: FitnessReport, baseline: FitnessReport) -> Tuple[float, ...]:
    """Validation fitness over baseline fitness per objective.

    A zero baseline objective gives 1.0 when the variant also scores zero and
    infinity otherwise, so such a fold never wins on that objective.
    """
    ratios = []
    for v, b in zip(report.objectives, baseline.objectives):
        if b == 0:
            ratios.append(1.0 if v == 0 else math.inf)
        else:
            ratios.append(v / b)
    return tuple(ratios)


def _repeated(
    evaluator: Evaluator, patch: Patch, instances: Sequence[str], repeats: int
) -> Tuple[FitnessReport, Optional[List[Stability]]]:
    report = evaluator.evaluate(patch, instances)
    if repeats < 2 or not report.is_clean:
        return report, None
    series = [report] + [evaluator.evaluate(patch, instances, use_cache=False) for _ in range(repeats - 1)]
    failed = [r for r in series if not r.is_clean]
    if failed:
        return failed[0], None
    stability = measure_stability(series)
    return replace(report, objectives=tuple(s.mean for s in stability)), stability


def _run_fold(
    evaluator: Evaluator,
    fold: Fold,
    seed: np.random.SeedSequence,
    config: CampaignConfig,
) -> FoldOutcome:
    search = joint_search if config.joint else local_search
    trace = search(evaluator, fold.training, config.search, np.random.default_rng(seed))
    minimized = minimize(evaluator, trace.best_patch, fold.validation)
    ratio = _ratio(minimized.report, minimized.baseline)
    get_logger().log_entry(
        "fold",
        index=fold.index,
        searched=str(trace.best_patch),
        minimized=str(minimized.patch),
        ratio=[r if math.isfinite(r) else None for r in ratio],
    )
    return FoldOutcome(fold, trace, minimized, ratio)


def run_campaign(
    evaluator: Evaluator,
    train: Sequence[str],
    test: Sequence[str],
    config: CampaignConfig,
) -> CampaignResult:
    """k-fold search and validation, then one test of the best patch.

    Fold i searches with a generator spawned from the campaign seed, so its
    result does not depend on the other folds. With more than one process
    slot the folds run concurrently and share the evaluator's slots.
    """
    if not train or not test:
        raise ScenarioError("Campaign needs non-empty training and test instance sets")
    overlap = set(train) & set(test)
    if overlap:
        raise ScenarioError(f"Training and test instances overlap: {', '.join(sorted(overlap)[:5])}")

    plan = make_fold_plan(train, config.k, config.search.seed, config.cap)
    seeds = np.random.SeedSequence(config.search.seed).spawn(plan.k)

    if evaluator.process_slots > 1:
        with ThreadPoolExecutor(max_workers=min(plan.k, evaluator.process_slots)) as pool:
            outcomes = list(pool.map(lambda job: _run_fold(evaluator, *job, config), zip(plan.folds, seeds)))
    else:
        outcomes = [_run_fold(evaluator, fold, seed, config) for fold, seed in zip(plan.folds, seeds)]

    best = min(outcomes, key=lambda o: (o.ratio, len(o.minimized.patch), o.fold.index))
    selected = best.minimized.patch
    selected_fold = best.fold.index if len(selected) else None

    baseline_test, baseline_stability = _repeated(evaluator, Patch(), test, config.test_repeats)
    if not baseline_test.is_clean:
        raise BaselineFailure(f"The unmodified program is {baseline_test.status.value} on the test instances")
    test_report, test_stability = _repeated(evaluator, selected, test, config.test_repeats)

    improvement = defined_improvement(baseline_test, test_report) if test_report.is_clean else None
    stability = None
    if baseline_stability is not None and test_stability is not None:
        stability = {"baseline": baseline_stability, "selected": test_stability}
    return CampaignResult(
        plan=plan,
        folds=outcomes,
        selected=selected,
        selected_fold=selected_fold,
        test_report=test_report,
        baseline_test_report=baseline_test,
        improvement=improvement,
        test_stability=stability,
    )
