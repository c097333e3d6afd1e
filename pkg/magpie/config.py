"""Scenario configuration for MAGPIE."""

import hashlib
import os
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from dotenv import load_dotenv

from .errors import ConfigError, MissingFile
from .measure import MeasurementSpec
from .params import load_param_space
from .srcml import DEFAULT_STMT_TAGS

# Load environment variables from .env
load_dotenv()

WORKDIR_ENV = "MAGPIE_WORKDIR"


@dataclass
class Scenario:
    """Everything a run needs: files, commands, timeouts, objectives, defaults."""

    path: Path
    base_dir: Path
    run_cmd: str
    target_files: List[Path] = field(default_factory=list)
    file_ids: List[str] = field(default_factory=list)
    param_space_file: Optional[Path] = None
    stmt_tags: Tuple[str, ...] = DEFAULT_STMT_TAGS
    program_dir: Optional[Path] = None
    compile_cmd: Optional[str] = None
    compile_timeout_s: float = 60.0
    run_timeout_s: float = 30.0
    objectives: Tuple[str, ...] = ("time",)
    measures: Dict[str, MeasurementSpec] = field(default_factory=dict)
    counter_wrapper: Optional[str] = None
    train_instances_file: Optional[Path] = None
    test_instances_file: Optional[Path] = None
    process_slots: int = 1
    work_dir: Optional[Path] = None
    keep_failures: bool = False
    cache_file: Optional[Path] = None
    budget: int = 1000
    joint_budget: int = 4000
    k: int = 10
    seed: int = 0
    p_remove: float = 0.5
    accept_equal: bool = True
    samples_per_numeric_param: int = 10
    special_weight: float = 0.1
    repeats: int = 1
    test_repeats: int = 1

    def __post_init__(self) -> None:
        if self.work_dir is None:
            self.work_dir = self.base_dir / "_magpie_work"
        for name in self.objectives:
            self.measures.setdefault(name, MeasurementSpec())

    @property
    def measurement_specs(self) -> List[MeasurementSpec]:
        return [self.measures[name] for name in self.objectives]

    def digest(self) -> str:
        """Stable digest of everything that changes what a measurement means."""
        parts = [
            self.compile_cmd or "",
            self.run_cmd,
            self.counter_wrapper or "",
            ",".join(self.objectives),
            ";".join(str(spec) for spec in self.measurement_specs),
            str(self.repeats),
        ]
        return hashlib.sha256("\x00".join(parts).encode("utf-8")).hexdigest()[:16]

    def train_instances(self) -> List[str]:
        return read_instances(self.train_instances_file, "train_instances_file")

    def test_instances(self) -> List[str]:
        return read_instances(self.test_instances_file, "test_instances_file")

    def pretty_print(self) -> str:
        lines = [
            "Scenario:",
            f"  File:        {self.path}",
            f"  Targets:     {', '.join(self.file_ids) or '(none)'}",
            f"  Params:      {self.param_space_file or '(none)'}",
            f"  Compile:     {self.compile_cmd or '(none)'}",
            f"  Run:         {self.run_cmd}",
            f"  Objectives:  {', '.join(f'{n} [{self.measures[n]}]' for n in self.objectives)}",
            f"  Work dir:    {self.work_dir}",
        ]
        return "\n".join(lines)


def read_instances(path: Optional[Path], key: str = "instances") -> List[str]:
    """One instance string per line; blank lines and `#` comments are skipped."""
    if path is None:
        raise ConfigError(key, "not set in scenario")
    if not path.exists():
        raise MissingFile(f"Instance file not found: {path}")
    instances = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            instances.append(line)
    return instances


def _parse_bool(key: str, value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got '{value}'")


def _parse_number(key: str, value: str, kind=int, minimum=None, maximum=None, below=None):
    try:
        number = kind(value)
    except ValueError:
        raise ConfigError(key, f"expected {kind.__name__}, got '{value}'") from None
    if minimum is not None and number < minimum:
        raise ConfigError(key, f"must be >= {minimum}")
    if maximum is not None and number > maximum:
        raise ConfigError(key, f"must be <= {maximum}")
    if below is not None and number >= below:
        raise ConfigError(key, f"must be < {below}")
    return number


def _split_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _file_id(path: Path, base_dir: Path) -> str:
    try:
        rel = path.relative_to(base_dir)
    except ValueError:
        rel = Path(path.name)
    text = rel.as_posix()
    return text[: -len(".xml")] if text.endswith(".xml") else text


class ScenarioLoader:
    """Parses and validates scenario files (flat ``key = value`` lines)."""

    PATH_KEYS = (
        "param_space_file",
        "program_dir",
        "train_instances_file",
        "test_instances_file",
        "work_dir",
        "cache_file",
    )
    INT_KEYS = {
        "process_slots": 1,
        "budget": 0,
        "joint_budget": 0,
        "k": 2,
        "seed": 0,
        "samples_per_numeric_param": 1,
        "repeats": 1,
        "test_repeats": 1,
    }
    FLOAT_KEYS = ("compile_timeout_s", "run_timeout_s")
    VALID_KEYS = (
        ("target_files", "stmt_tags", "compile_cmd", "run_cmd", "objectives", "counter_wrapper",
         "keep_failures", "p_remove", "accept_equal", "special_weight")
        + PATH_KEYS
        + tuple(INT_KEYS)
        + FLOAT_KEYS
    )
    MEASURE_PREFIX = "measure."

    def __init__(self, path: Path):
        self.path = Path(path).resolve()
        self.base_dir = self.path.parent

    def read_pairs(self) -> Dict[str, str]:
        if not self.path.exists():
            raise MissingFile(f"Scenario file not found: {self.path}")
        pairs: Dict[str, str] = {}
        for number, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ConfigError(f"line {number}", f"expected 'key = value', got '{line}'")
            if key in pairs:
                raise ConfigError(key, "given more than once")
            if key not in self.VALID_KEYS and not key.startswith(self.MEASURE_PREFIX):
                raise ConfigError(
                    key, f"unknown key. Valid keys: {', '.join(sorted(self.VALID_KEYS))}, measure.<objective>"
                )
            pairs[key] = value.strip()
        return pairs

    def resolve(self, value: str) -> Path:
        path = Path(value).expanduser()
        return path if path.is_absolute() else (self.base_dir / path).resolve()

    def _expand(self, command: str) -> str:
        return command.replace("{PYTHON}", shlex.quote(sys.executable))

    def load(self) -> Scenario:
        pairs = self.read_pairs()
        if "run_cmd" not in pairs or not pairs["run_cmd"]:
            raise ConfigError("run_cmd", "required")

        kwargs = {}
        run_cmd = self._expand(pairs.pop("run_cmd"))
        if "{INST}" not in run_cmd:
            raise ConfigError("run_cmd", "must contain the {INST} placeholder")

        if "target_files" in pairs:
            files = [self.resolve(f) for f in _split_list(pairs.pop("target_files"))]
            for f in files:
                if not f.exists():
                    raise MissingFile(f"Target file not found: {f}")
            kwargs["target_files"] = files
            kwargs["file_ids"] = [_file_id(f, self.base_dir) for f in files]
            if len(set(kwargs["file_ids"])) != len(files):
                raise ConfigError("target_files", "duplicate file ids")

        if "stmt_tags" in pairs:
            tags = tuple(_split_list(pairs.pop("stmt_tags")))
            if not tags:
                raise ConfigError("stmt_tags", "must name at least one tag")
            kwargs["stmt_tags"] = tags

        for key in self.PATH_KEYS:
            if key in pairs:
                kwargs[key] = self.resolve(pairs.pop(key))
        for key in ("param_space_file", "program_dir", "train_instances_file", "test_instances_file"):
            if key in kwargs and not kwargs[key].exists():
                raise MissingFile(f"{key} not found: {kwargs[key]}")

        env_workdir = os.getenv(WORKDIR_ENV)
        if env_workdir:
            kwargs["work_dir"] = Path(env_workdir).expanduser().resolve()

        if "compile_cmd" in pairs:
            kwargs["compile_cmd"] = self._expand(pairs.pop("compile_cmd")) or None
        if "counter_wrapper" in pairs:
            wrapper = pairs.pop("counter_wrapper")
            if "{CMD}" not in wrapper:
                raise ConfigError("counter_wrapper", "must contain the {CMD} placeholder")
            kwargs["counter_wrapper"] = self._expand(wrapper)

        for key, minimum in self.INT_KEYS.items():
            if key in pairs:
                kwargs[key] = _parse_number(key, pairs.pop(key), int, minimum=minimum)
        for key in self.FLOAT_KEYS:
            if key in pairs:
                kwargs[key] = _parse_number(key, pairs.pop(key), float, minimum=0.0)
        if "p_remove" in pairs:
            kwargs["p_remove"] = _parse_number("p_remove", pairs.pop("p_remove"), float, minimum=0.0, below=1.0)
        if "special_weight" in pairs:
            kwargs["special_weight"] = _parse_number(
                "special_weight", pairs.pop("special_weight"), float, minimum=0.0, maximum=1.0
            )
        for key in ("keep_failures", "accept_equal"):
            if key in pairs:
                kwargs[key] = _parse_bool(key, pairs.pop(key))

        objectives = tuple(_split_list(pairs.pop("objectives", "time")))
        if not objectives or len(set(objectives)) != len(objectives):
            raise ConfigError("objectives", "must list distinct objective names")
        measures: Dict[str, MeasurementSpec] = {}
        for key in [k for k in pairs if k.startswith(self.MEASURE_PREFIX)]:
            name = key[len(self.MEASURE_PREFIX):]
            if name not in objectives:
                raise ConfigError(key, f"'{name}' is not one of the objectives")
            try:
                measures[name] = MeasurementSpec.parse(pairs.pop(key))
            except ValueError as e:
                raise ConfigError(key, str(e)) from None
        if any(m.source == "counter_command" for m in measures.values()) and "counter_wrapper" not in kwargs:
            raise ConfigError("counter_wrapper", "required by counter_command measurements")

        scenario = Scenario(
            path=self.path,
            base_dir=self.base_dir,
            run_cmd=run_cmd,
            objectives=objectives,
            measures=measures,
            **kwargs,
        )
        self._check_params_placeholder(scenario)
        return scenario

    def _check_params_placeholder(self, scenario: Scenario) -> None:
        if scenario.param_space_file is None:
            return
        if len(load_param_space(scenario.param_space_file)) == 0:
            return
        commands = [scenario.run_cmd, scenario.compile_cmd or ""]
        if not any("{PARAMS}" in c for c in commands):
            raise ConfigError("run_cmd", "must contain {PARAMS} (or compile_cmd must) for a non-empty parameter space")


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file; relative paths resolve against its directory."""
    return ScenarioLoader(Path(path)).load()
