"""Objective measurement: wall clock, counter wrappers and output patterns."""

import re
from dataclasses import dataclass
from typing import Optional

WALL_CLOCK = "wall_clock"
COUNTER_COMMAND = "counter_command"
OUTPUT_REGEX = "output_regex"
SOURCES = (WALL_CLOCK, COUNTER_COMMAND, OUTPUT_REGEX)


class MeasurementFailed(Exception):
    """The run finished but its output does not contain the objective."""


@dataclass(frozen=True)
class MeasurementSpec:
    """How one objective is read from a run.

    ``counter_command`` reads ``pattern`` from the combined output of the run
    wrapped by the scenario's ``counter_wrapper`` (e.g. ``perf stat``);
    ``output_regex`` reads it from the program's own output.
    """

    source: str = WALL_CLOCK
    pattern: Optional[str] = None

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(
                f"Unknown measurement source '{self.source}'. "
                f"Valid options: {', '.join(SOURCES)}"
            )
        if self.source == WALL_CLOCK:
            if self.pattern:
                raise ValueError("wall_clock takes no pattern")
            return
        if not self.pattern:
            raise ValueError(f"{self.source} needs a pattern")
        try:
            groups = re.compile(self.pattern).groups
        except re.error as e:
            raise ValueError(f"Invalid pattern '{self.pattern}': {e}") from None
        if groups != 1:
            raise ValueError(
                f"Pattern '{self.pattern}' must have exactly one capture group, has {groups}"
            )

    @classmethod
    def parse(cls, text: str) -> "MeasurementSpec":
        """``wall_clock`` | ``output_regex <pattern>`` | ``counter_command <pattern>``."""
        source, _, pattern = text.strip().partition(" ")
        return cls(source=source, pattern=pattern.strip() or None)

    def __str__(self) -> str:
        return self.source if self.pattern is None else f"{self.source} {self.pattern}"

    def extract(self, output: str, wall_time: float) -> float:
        if self.source == WALL_CLOCK:
            return wall_time
        matches = re.findall(self.pattern, output)
        if not matches:
            raise MeasurementFailed(f"pattern '{self.pattern}' not found in output")
        # last occurrence wins
        text = matches[-1].replace(",", "")
        try:
            return float(text)
        except ValueError:
            raise MeasurementFailed(f"'{text}' is not a number") from None
