"""Execution-based fitness: render a variant, compile it, run it, measure it."""

import hashlib
import os
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import cmp_to_key
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .cache import FitnessCache
from .config import Scenario
from .errors import ArityMismatch, OutOfDomainValue, ScenarioError, WorkspaceError, ZeroMean
from .measure import COUNTER_COMMAND, OUTPUT_REGEX, MeasurementFailed
from .output import get_logger
from .params import render_configuration
from .patch import Patch, serialize_patch
from .target import TargetModel
from .variant import VariantArtifacts, apply_patch

FitnessValue = Tuple[float, ...]


class VariantStatus(str, Enum):
    CLEAN = "CLEAN"
    INVALID_CONFIG = "INVALID_CONFIG"
    COMPILE_ERROR = "COMPILE_ERROR"
    RUNTIME_ERROR = "RUNTIME_ERROR"
    TIMEOUT = "TIMEOUT"
    OUTPUT_ERROR = "OUTPUT_ERROR"


@dataclass(frozen=True)
class InstanceRecord:
    instance: str
    status: VariantStatus
    objectives: Optional[FitnessValue] = None
    wall_time: float = 0.0
    detail: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instance": self.instance,
            "status": self.status.value,
            "objectives": list(self.objectives) if self.objectives is not None else None,
            "wall_time": self.wall_time,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InstanceRecord":
        objectives = data.get("objectives")
        return cls(
            instance=data["instance"],
            status=VariantStatus(data["status"]),
            objectives=tuple(objectives) if objectives is not None else None,
            wall_time=data.get("wall_time", 0.0),
            detail=data.get("detail"),
        )


@dataclass(frozen=True)
class FitnessReport:
    """Outcome of one evaluation.

    Only CLEAN reports carry ``objectives``: the arithmetic mean of the
    per-instance objective vectors.
    """

    status: VariantStatus
    objectives: Optional[FitnessValue] = None
    instances: Tuple[InstanceRecord, ...] = ()
    cache_hit: bool = False
    ordinal: int = 0
    digest: str = ""
    patch_text: str = ""
    wall_time: float = 0.0
    detail: Optional[str] = None

    @property
    def is_clean(self) -> bool:
        return self.status is VariantStatus.CLEAN

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "objectives": list(self.objectives) if self.objectives is not None else None,
            "instances": [r.to_dict() for r in self.instances],
            "cache_hit": self.cache_hit,
            "ordinal": self.ordinal,
            "digest": self.digest,
            "patch": self.patch_text,
            "wall_time": self.wall_time,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FitnessReport":
        objectives = data.get("objectives")
        return cls(
            status=VariantStatus(data["status"]),
            objectives=tuple(float(v) for v in objectives) if objectives is not None else None,
            instances=tuple(InstanceRecord.from_dict(r) for r in data.get("instances", [])),
            cache_hit=bool(data.get("cache_hit", False)),
            ordinal=int(data.get("ordinal", 0)),
            digest=data.get("digest", ""),
            patch_text=data.get("patch", ""),
            wall_time=float(data.get("wall_time", 0.0)),
            detail=data.get("detail"),
        )


def compare(a: FitnessReport, b: FitnessReport) -> int:
    """-1 when ``a`` is better, 1 when ``b`` is, 0 on equal rank.

    CLEAN beats every failure, failures all rank equal, CLEAN reports
    compare lexicographically (lower is better).
    """
    if a.is_clean and b.is_clean:
        if len(a.objectives) != len(b.objectives):
            raise ArityMismatch(
                f"Cannot compare {len(a.objectives)} objectives with {len(b.objectives)}"
            )
        return (a.objectives > b.objectives) - (a.objectives < b.objectives)
    if a.is_clean:
        return -1
    if b.is_clean:
        return 1
    return 0


fitness_key = cmp_to_key(compare)


@dataclass(frozen=True)
class Stability:
    mean: float
    stddev: float
    cov: float

    def to_dict(self) -> Dict[str, float]:
        return {"mean": self.mean, "stddev": self.stddev, "cov": self.cov}


def measure_stability(series: Sequence[Union[FitnessReport, Sequence[float], float]]) -> List[Stability]:
    """Mean, population stddev and coefficient of variation per objective."""
    rows = []
    for item in series:
        if isinstance(item, FitnessReport):
            if not item.is_clean:
                raise ValueError(f"Cannot measure stability over a {item.status.value} report")
            rows.append(item.objectives)
        elif isinstance(item, (int, float)):
            rows.append((float(item),))
        else:
            rows.append(tuple(item))
    if len(rows) < 2:
        raise ValueError("Stability needs at least two measurements")
    if len({len(r) for r in rows}) != 1:
        raise ArityMismatch("Measurements have different numbers of objectives")

    data = np.asarray(rows, dtype=float)
    means = data.mean(axis=0)
    stds = data.std(axis=0)
    result = []
    for mean, std in zip(means, stds):
        if mean == 0:
            raise ZeroMean("Coefficient of variation is undefined for a zero mean")
        result.append(Stability(float(mean), float(std), float(std / abs(mean))))
    return result


def instance_set_id(instances: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(instances).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class _RunResult:
    returncode: Optional[int]
    stdout: str
    stderr: str
    wall_time: float
    timed_out: bool

    @property
    def output(self) -> str:
        return self.stdout + self.stderr


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def _tail(text: str, lines: int = 20) -> str:
    return "\n".join(text.strip().splitlines()[-lines:])


class Evaluator:
    """Evaluates patches against one scenario.

    Process launches are bounded by ``process_slots`` across every thread
    using this evaluator. ``launches`` counts processes started so far.
    """

    def __init__(
        self,
        model: TargetModel,
        scenario: Scenario,
        cache: Optional[FitnessCache] = None,
        process_slots: Optional[int] = None,
        keep_failures: Optional[bool] = None,
    ):
        if not scenario.run_cmd or "{INST}" not in scenario.run_cmd:
            raise ScenarioError("Scenario run_cmd must be set and contain {INST}")
        self.model = model
        self.scenario = scenario
        if cache is None:
            cache = FitnessCache(scenario.cache_file or Path(scenario.work_dir) / "cache.jsonl")
        self.cache = cache
        self.process_slots = process_slots or scenario.process_slots
        self.keep_failures = scenario.keep_failures if keep_failures is None else keep_failures
        self.scenario_digest = scenario.digest()
        self.launches = 0
        self.evaluations = 0
        self._slots = threading.BoundedSemaphore(self.process_slots)
        self._lock = threading.Lock()
        self._wraps_counter = scenario.counter_wrapper is not None and any(
            spec.source == COUNTER_COMMAND for spec in scenario.measurement_specs
        )

    # -- public API ---------------------------------------------------------

    def baseline(self, instances: Sequence[str]) -> FitnessReport:
        return self.evaluate(Patch(), instances)

    def evaluate(self, patch: Patch, instances: Sequence[str], use_cache: bool = True) -> FitnessReport:
        instances = list(instances)
        if not instances:
            raise ScenarioError("No instances to evaluate on")
        with self._lock:
            self.evaluations += 1
            ordinal = self.evaluations
        start = time.perf_counter()
        patch_text = serialize_patch(patch)

        artifacts = apply_patch(self.model, patch)
        try:
            config = render_configuration(self.model.param_space, artifacts.assignment)
        except OutOfDomainValue as e:
            report = FitnessReport(VariantStatus.INVALID_CONFIG, detail=str(e))
            return self._finish(report, ordinal, patch_text, start)
        if not config.valid:
            report = FitnessReport(
                VariantStatus.INVALID_CONFIG, detail="forbidden: " + "; ".join(config.violated)
            )
            return self._finish(report, ordinal, patch_text, start)

        digest = self.digest_of(artifacts, config.text, instances)
        if use_cache:
            cached = self.cache.get(digest)
            if cached is not None:
                report = replace(FitnessReport.from_dict(cached), cache_hit=True, digest=digest)
                return self._finish(report, ordinal, patch_text, start)

        report = replace(self._execute(artifacts, config.text, instances, ordinal), digest=digest)
        self.cache.put(digest, replace(report, patch_text=patch_text, ordinal=ordinal).to_dict())
        return self._finish(report, ordinal, patch_text, start)

    def digest_of(self, artifacts: VariantArtifacts, config_text: str, instances: Sequence[str]) -> str:
        """Identity of an evaluation: rendered files, configuration, instances, scenario."""
        h = hashlib.sha256()
        h.update(self.scenario_digest.encode("utf-8"))
        for file_id in sorted(artifacts.sources):
            h.update(b"\x00file\x00" + file_id.encode("utf-8"))
            h.update(b"\x00" + artifacts.sources[file_id].encode("utf-8"))
        h.update(b"\x00params\x00" + config_text.encode("utf-8"))
        h.update(b"\x00instances\x00" + instance_set_id(instances).encode("utf-8"))
        return h.hexdigest()

    # -- pipeline -------------------------------------------------------------

    def _finish(self, report: FitnessReport, ordinal: int, patch_text: str, start: float) -> FitnessReport:
        report = replace(
            report,
            ordinal=ordinal,
            patch_text=patch_text,
            wall_time=time.perf_counter() - start,
        )
        get_logger().log_entry(
            "evaluate",
            error=report.detail if not report.is_clean else None,
            ordinal=report.ordinal,
            patch=report.patch_text,
            digest=report.digest,
            status=report.status.value,
            objectives=list(report.objectives) if report.objectives is not None else None,
            wall_time=round(report.wall_time, 6),
            cache_hit=report.cache_hit,
        )
        return report

    def _execute(
        self, artifacts: VariantArtifacts, config_text: str, instances: List[str], ordinal: int
    ) -> FitnessReport:
        work = self._make_workdir(ordinal)
        try:
            self._write_variant(work, artifacts)
            report = self._compile(work, config_text)
            if report is None:
                report = self._run_instances(work, config_text, instances)
        except BaseException:
            self._cleanup(work, keep=self.keep_failures)
            raise
        self._cleanup(work, keep=self.keep_failures and not report.is_clean)
        return report

    def _make_workdir(self, ordinal: int) -> Path:
        root = Path(self.scenario.work_dir) / "variants"
        try:
            root.mkdir(parents=True, exist_ok=True)
            work = Path(tempfile.mkdtemp(prefix=f"eval-{ordinal:05d}-", dir=root))
            if self.scenario.program_dir is not None:
                shutil.copytree(self.scenario.program_dir, work, dirs_exist_ok=True)
        except OSError as e:
            raise WorkspaceError(f"Cannot prepare work directory under {root}: {e}") from None
        return work

    def _write_variant(self, work: Path, artifacts: VariantArtifacts) -> None:
        try:
            for file_id, text in artifacts.sources.items():
                path = work / file_id
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise WorkspaceError(f"Cannot write variant into {work}: {e}") from None

    def _cleanup(self, work: Path, keep: bool) -> None:
        if keep:
            return
        try:
            shutil.rmtree(work)
        except OSError as e:
            raise WorkspaceError(f"Cannot remove work directory {work}: {e}") from None

    def _compile(self, work: Path, config_text: str) -> Optional[FitnessReport]:
        if not self.scenario.compile_cmd:
            return None
        command = self.scenario.compile_cmd.replace("{PARAMS}", config_text)
        result = self._launch(command, work, self.scenario.compile_timeout_s)
        if result.timed_out:
            return FitnessReport(VariantStatus.TIMEOUT, detail="compile step timed out")
        if result.returncode != 0:
            return FitnessReport(
                VariantStatus.COMPILE_ERROR,
                detail=f"exit {result.returncode}: {_tail(result.output)}",
            )
        return None

    def _run_instances(self, work: Path, config_text: str, instances: List[str]) -> FitnessReport:
        """Run every instance; after the first failure, instances not yet started are skipped."""
        failed = threading.Event()

        def run(instance: str) -> Optional[InstanceRecord]:
            if failed.is_set():
                return None
            record = self._run_instance(work, config_text, instance)
            if record.status is not VariantStatus.CLEAN:
                failed.set()
            return record

        if self.process_slots > 1 and len(instances) > 1:
            with ThreadPoolExecutor(max_workers=self.process_slots) as pool:
                outcomes = list(pool.map(run, instances))
        else:
            outcomes = [run(instance) for instance in instances]
        records = tuple(r for r in outcomes if r is not None)

        for record in records:
            if record.status is not VariantStatus.CLEAN:
                return FitnessReport(record.status, instances=records, detail=record.detail)
        mean = np.mean([r.objectives for r in records], axis=0)
        return FitnessReport(
            VariantStatus.CLEAN,
            objectives=tuple(float(v) for v in mean),
            instances=records,
        )

    def _run_instance(self, work: Path, config_text: str, instance: str) -> InstanceRecord:
        command = self.scenario.run_cmd.replace("{INST}", instance).replace("{PARAMS}", config_text)
        if self._wraps_counter:
            command = self.scenario.counter_wrapper.replace("{CMD}", command)

        samples = []
        wall_time = 0.0
        for _ in range(self.scenario.repeats):
            result = self._launch(command, work, self.scenario.run_timeout_s)
            wall_time += result.wall_time
            if result.timed_out:
                return InstanceRecord(
                    instance, VariantStatus.TIMEOUT, wall_time=wall_time,
                    detail=f"timed out after {self.scenario.run_timeout_s}s",
                )
            if result.returncode != 0:
                return InstanceRecord(
                    instance, VariantStatus.RUNTIME_ERROR, wall_time=wall_time,
                    detail=f"exit {result.returncode}: {_tail(result.output)}",
                )
            try:
                samples.append(tuple(
                    spec.extract(result.stdout if spec.source == OUTPUT_REGEX else result.output, result.wall_time)
                    for spec in self.scenario.measurement_specs
                ))
            except MeasurementFailed as e:
                return InstanceRecord(instance, VariantStatus.OUTPUT_ERROR, wall_time=wall_time, detail=str(e))

        objectives = tuple(float(v) for v in np.mean(samples, axis=0))
        return InstanceRecord(instance, VariantStatus.CLEAN, objectives, wall_time)

    def _launch(self, command: str, cwd: Path, timeout: float) -> _RunResult:
        with self._slots:
            with self._lock:
                self.launches += 1
            start = time.perf_counter()
            try:
                proc = subprocess.Popen(
                    command,
                    shell=True,
                    cwd=str(cwd),
                    stdin=subprocess.DEVNULL,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    text=True,
                    errors="replace",
                    start_new_session=True,
                )
            except OSError as e:
                raise WorkspaceError(f"Cannot launch '{command}': {e}") from None
            try:
                stdout, stderr = proc.communicate(timeout=timeout)
                timed_out = False
            except subprocess.TimeoutExpired:
                _kill_group(proc)
                stdout, stderr = proc.communicate()
                timed_out = True
            return _RunResult(
                returncode=proc.returncode,
                stdout=stdout or "",
                stderr=stderr or "",
                wall_time=time.perf_counter() - start,
                timed_out=timed_out,
            )
