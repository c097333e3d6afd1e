"""Per-invocation state shared by the CLI handlers."""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from .cache import FitnessCache
from .config import Scenario, load_scenario, read_instances
from .errors import MissingFile
from .evaluator import Evaluator
from .patch import Patch, parse_patch
from .target import TargetModel, parse_target


@dataclass
class Session:
    scenario: Scenario
    model: TargetModel
    evaluator: Evaluator
    verbose: bool = False

    def instances(self, path: Optional[str], default: str = "train") -> List[str]:
        """Instances from an explicit file, else the scenario's train/test list."""
        if path:
            return read_instances(Path(path), "--instances")
        if default == "test":
            return self.scenario.test_instances()
        return self.scenario.train_instances()


def load_patch_file(path: str) -> Patch:
    patch_path = Path(path)
    if not patch_path.exists():
        raise MissingFile(f"Patch file not found: {patch_path}")
    return parse_patch(patch_path.read_text(encoding="utf-8"))


def open_session(
    scenario_path: str,
    work_dir: Optional[str] = None,
    process_slots: Optional[int] = None,
    keep_failures: bool = False,
    seed: Optional[int] = None,
    verbose: bool = False,
) -> Session:
    """Load a scenario, apply command-line overrides, build model and evaluator."""
    scenario = load_scenario(scenario_path)
    if work_dir:
        scenario.work_dir = Path(work_dir).expanduser().resolve()
    if process_slots:
        scenario.process_slots = process_slots
    if keep_failures:
        scenario.keep_failures = True
    if seed is not None:
        scenario.seed = seed

    model = parse_target(scenario)
    cache = FitnessCache(scenario.cache_file or Path(scenario.work_dir) / "cache.jsonl")
    evaluator = Evaluator(model, scenario, cache)
    return Session(scenario, model, evaluator, verbose)
