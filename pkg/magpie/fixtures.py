"""Toy targets and exhaustive oracles used to check search and minimization."""

import itertools
from dataclasses import dataclass
from math import comb
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .cache import FitnessCache
from .config import Scenario, load_scenario
from .errors import MissingFile, SpaceTooLarge
from .evaluator import Evaluator, FitnessReport, compare
from .patch import EditKind, Patch
from .target import TargetModel, enumerate_edit_space, parse_target

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"
TOY_NAMES = ("param-knob", "dead-stmt", "knob-and-stmt", "flag-pairs")
DEFAULT_ORACLE_CAP = 5000


@dataclass
class ToyTarget:
    name: str
    directory: Path
    scenario: Scenario
    model: TargetModel

    def evaluator(self, cache: Optional[FitnessCache] = None, **kwargs) -> Evaluator:
        return Evaluator(self.model, self.scenario, cache if cache is not None else FitnessCache(), **kwargs)

    def train_instances(self) -> List[str]:
        return self.scenario.train_instances()

    def test_instances(self) -> List[str]:
        return self.scenario.test_instances()


def load_toy(name: str, root: Path = FIXTURES_DIR) -> ToyTarget:
    """Load ``<root>/<name>/scenario.cfg`` and its target model."""
    directory = Path(root) / name
    if not directory.is_dir():
        raise MissingFile(f"No toy target '{name}' under {root}")
    scenario = load_scenario(directory / "scenario.cfg")
    return ToyTarget(name, directory, scenario, parse_target(scenario))


@dataclass(frozen=True)
class OracleResult:
    patch: Patch
    report: FitnessReport
    candidates: int
    distinct: int


def _pick_best(best: OracleResult, patch: Patch, report: FitnessReport) -> bool:
    order = compare(report, best.report)
    return order < 0 or (order == 0 and len(patch) < len(best.patch))


def brute_force_optimum(
    evaluator: Evaluator,
    families: Iterable[EditKind],
    max_patch_len: int,
    instances: Sequence[str],
    cap: int = DEFAULT_ORACLE_CAP,
    samples_per_numeric_param: int = 10,
    seed: int = 0,
) -> OracleResult:
    """Best patch of at most ``max_patch_len`` edits from ``families``.

    Patches are enumerated as edit combinations; patches with identical
    rendered artifacts share one evaluation through the evaluator's cache.
    Raises SpaceTooLarge when the number of combinations exceeds ``cap``.
    """
    families = list(families)
    baseline = evaluator.baseline(instances)
    best = OracleResult(Patch(), baseline, 1, 1)
    if not families or max_patch_len <= 0:
        return best

    space = enumerate_edit_space(
        evaluator.model,
        families,
        samples_per_numeric_param=samples_per_numeric_param,
        rng=np.random.default_rng(seed),
    )
    edits = [edit for family in space.values() for edit in family]
    total = sum(comb(len(edits), n) for n in range(1, max_patch_len + 1))
    if total > cap:
        raise SpaceTooLarge(f"{total} candidate patches exceed the cap of {cap}")

    digests = {baseline.digest}
    candidates = 1
    for size in range(1, max_patch_len + 1):
        for combo in itertools.combinations(edits, size):
            patch = Patch(combo)
            report = evaluator.evaluate(patch, instances)
            candidates += 1
            digests.add(report.digest or str(patch))
            if _pick_best(best, patch, report):
                best = OracleResult(patch, report, candidates, len(digests))
    return OracleResult(best.patch, best.report, candidates, len(digests))


def subset_optimum(evaluator: Evaluator, patch: Patch, instances: Sequence[str]) -> OracleResult:
    """Best order-preserving subsequence of ``patch`` (all 2^n of them)."""
    baseline = evaluator.baseline(instances)
    best = OracleResult(Patch(), baseline, 1, 1)
    digests = {baseline.digest}
    candidates = 1
    for size in range(1, len(patch) + 1):
        for indexes in itertools.combinations(range(len(patch)), size):
            candidate = Patch(patch[i] for i in indexes)
            report = evaluator.evaluate(candidate, instances)
            candidates += 1
            digests.add(report.digest or str(candidate))
            if _pick_best(best, candidate, report):
                best = OracleResult(candidate, report, candidates, len(digests))
    return OracleResult(best.patch, best.report, candidates, len(digests))
