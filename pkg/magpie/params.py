"""Parameter spaces: parsing, validation, rendering and value sampling.

Parameter-space file format, one declaration per line::

    <name> {v1,v2,...} [default] <template>
    <name> [lo,hi] [default] (int|float) [uniform|log] [special{0,1,-1}] <template>
    condition <child> | <parent> in {v1,v2,...}
    forbidden {a=1, b=2}

Templates use ``{}`` for the value, e.g. ``--luby={}`` or ``-O{}``.
Blank lines and ``#`` comments are ignored.
"""

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import MissingFile, OutOfDomainValue, SpaceError, UnknownParameter

CATEGORICAL = "categorical"
BOOLEAN = "boolean"
INTEGER = "integer"
FLOAT = "float"

UNIFORM = "uniform"
LOG_UNIFORM = "log-uniform"

# Integer domains up to this size are enumerated value by value.
ENUMERABLE_INT_LIMIT = 256
DEFAULT_SPECIAL_WEIGHT = 0.1


@dataclass(frozen=True)
class Condition:
    """Parameter is active iff ``parent`` is active and takes one of ``values``."""

    parent: str
    values: Tuple[str, ...]


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    default: str
    template: str
    values: Tuple[str, ...] = ()
    bounds: Optional[Tuple[float, float]] = None
    distribution: str = UNIFORM
    special_values: Tuple[str, ...] = ()
    conditions: Tuple[Condition, ...] = ()

    @property
    def is_numeric(self) -> bool:
        return self.kind in (INTEGER, FLOAT)

    @property
    def is_finite(self) -> bool:
        if not self.is_numeric:
            return True
        if self.kind == FLOAT:
            return False
        lo, hi = self.bounds
        return hi - lo + 1 <= ENUMERABLE_INT_LIMIT

    def domain_size(self) -> Optional[int]:
        """Number of distinct values, or None for continuous domains."""
        if not self.is_numeric:
            return len(self.values)
        if self.kind == FLOAT:
            return None
        lo, hi = self.bounds
        return int(hi - lo + 1)

    def domain_values(self) -> List[str]:
        """All values of a finite domain."""
        if not self.is_numeric:
            return list(self.values)
        if not self.is_finite:
            raise ValueError(f"Parameter '{self.name}' has no finite enumeration")
        lo, hi = self.bounds
        return [str(v) for v in range(int(lo), int(hi) + 1)]

    def normalize(self, value: str) -> str:
        """Canonical text of a value; raises OutOfDomainValue if not in the domain."""
        value = value.strip()
        if not self.is_numeric:
            if value not in self.values:
                raise OutOfDomainValue(
                    f"Value '{value}' not in domain of '{self.name}' "
                    f"({{{','.join(self.values)}}})"
                )
            return value

        try:
            number = float(value)
        except ValueError:
            raise OutOfDomainValue(f"Value '{value}' of '{self.name}' is not numeric") from None
        lo, hi = self.bounds
        if self.kind == INTEGER:
            if not number.is_integer():
                raise OutOfDomainValue(f"Value '{value}' of '{self.name}' is not an integer")
            number = int(number)
        if not (lo <= number <= hi) or math.isnan(number):
            raise OutOfDomainValue(
                f"Value '{value}' of '{self.name}' outside [{_fmt(lo)},{_fmt(hi)}]"
            )
        return _fmt(number)

    def render(self, value: str) -> str:
        return self.template.replace("{}", value)

    def sample(self, rng: np.random.Generator, special_weight: float = DEFAULT_SPECIAL_WEIGHT) -> str:
        """Draw a value: special values first with probability ``special_weight``."""
        if self.special_values and rng.random() < special_weight:
            return self.special_values[int(rng.integers(len(self.special_values)))]
        if not self.is_numeric:
            return self.values[int(rng.integers(len(self.values)))]

        lo, hi = self.bounds
        if self.distribution == LOG_UNIFORM:
            if self.kind == INTEGER:
                # log-uniform over integer bins [lo, hi + 1)
                number = math.exp(rng.uniform(math.log(lo), math.log(hi + 1)))
                return _fmt(min(int(math.floor(number)), int(hi)))
            number = math.exp(rng.uniform(math.log(lo), math.log(hi)))
            return _fmt(min(max(number, lo), hi))
        if self.kind == INTEGER:
            return _fmt(int(rng.integers(int(lo), int(hi) + 1)))
        return _fmt(float(rng.uniform(lo, hi)))


def _fmt(number) -> str:
    """Canonical text of a numeric value."""
    if isinstance(number, (int, np.integer)):
        return str(int(number))
    number = float(number)
    if number.is_integer() and abs(number) < 1e15:
        return str(int(number))
    return repr(number)


@dataclass
class ParamSpace:
    params: List[ParamSpec] = field(default_factory=list)
    forbidden: List[Dict[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._by_name = {p.name: p for p in self.params}
        self.validate()

    def __len__(self) -> int:
        return len(self.params)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> ParamSpec:
        if name not in self._by_name:
            raise UnknownParameter(f"Unknown parameter '{name}'")
        return self._by_name[name]

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.params]

    def validate(self) -> None:
        """Check every ParamSpace/ParamSpec invariant; raise SpaceError otherwise."""
        if len(self._by_name) != len(self.params):
            seen = set()
            dupes = sorted({p.name for p in self.params if p.name in seen or seen.add(p.name)})
            raise SpaceError(f"Duplicate parameter(s): {', '.join(dupes)}")

        for p in self.params:
            if p.is_numeric:
                if p.bounds is None or p.bounds[0] > p.bounds[1]:
                    raise SpaceError(f"Parameter '{p.name}' has invalid bounds {p.bounds}")
                if p.distribution == LOG_UNIFORM and p.bounds[0] <= 0:
                    raise SpaceError(f"Log-uniform parameter '{p.name}' needs lo > 0")
            elif not p.values:
                raise SpaceError(f"Parameter '{p.name}' has an empty domain")
            for value in (p.default, *p.special_values):
                try:
                    p.normalize(value)
                except OutOfDomainValue as e:
                    raise SpaceError(str(e)) from None
            for cond in p.conditions:
                if cond.parent not in self._by_name:
                    raise SpaceError(
                        f"Condition on '{p.name}' references unknown parameter '{cond.parent}'"
                    )
                parent = self._by_name[cond.parent]
                for value in cond.values:
                    try:
                        parent.normalize(value)
                    except OutOfDomainValue as e:
                        raise SpaceError(f"Condition on '{p.name}': {e}") from None

        self._check_cycles()

        for clause in self.forbidden:
            if not clause:
                raise SpaceError("Empty forbidden clause")
            for name, value in clause.items():
                if name not in self._by_name:
                    raise SpaceError(f"Forbidden clause references unknown parameter '{name}'")
                try:
                    self._by_name[name].normalize(value)
                except OutOfDomainValue as e:
                    raise SpaceError(f"Forbidden clause: {e}") from None

    def _check_cycles(self) -> None:
        state: Dict[str, int] = {}

        def visit(name: str, trail: List[str]) -> None:
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                cycle = trail[trail.index(name):] + [name]
                raise SpaceError(f"Condition cycle: {' -> '.join(cycle)}")
            state[name] = 1
            for cond in self._by_name[name].conditions:
                visit(cond.parent, trail + [name])
            state[name] = 2

        for p in self.params:
            visit(p.name, [])

    def effective(self, assignment: Mapping[str, str]) -> Dict[str, str]:
        """Defaults overridden by ``assignment``, values normalized."""
        for name in assignment:
            self.get(name)
        values = {}
        for p in self.params:
            raw = assignment.get(p.name, p.default)
            values[p.name] = p.normalize(raw)
        return values

    def active(self, values: Mapping[str, str]) -> Dict[str, bool]:
        """Activity of every parameter under a full effective assignment."""
        memo: Dict[str, bool] = {}

        def is_active(name: str) -> bool:
            if name not in memo:
                memo[name] = all(
                    is_active(c.parent)
                    and values[c.parent] in {self._by_name[c.parent].normalize(v) for v in c.values}
                    for c in self._by_name[name].conditions
                )
            return memo[name]

        return {p.name: is_active(p.name) for p in self.params}

    def violated_clauses(self, values: Mapping[str, str]) -> List[Dict[str, str]]:
        """Forbidden clauses matched by the full effective assignment."""
        return [
            clause
            for clause in self.forbidden
            if all(values[name] == self._by_name[name].normalize(value) for name, value in clause.items())
        ]


@dataclass(frozen=True)
class RenderedConfiguration:
    text: str
    valid: bool
    values: Dict[str, str]
    active: Dict[str, bool]
    violated: Tuple[str, ...] = ()


def render_configuration(space: ParamSpace, assignment: Mapping[str, str]) -> RenderedConfiguration:
    """Render the command-line text of an assignment and check forbidden clauses.

    Unassigned parameters take their defaults; inactive parameters are omitted.
    """
    values = space.effective(assignment)
    active = space.active(values)
    parts = []
    for p in space.params:
        if not active[p.name]:
            continue
        rendered = p.render(values[p.name])
        if rendered:
            parts.append(rendered)
    violated = space.violated_clauses(values)
    return RenderedConfiguration(
        text=" ".join(parts),
        valid=not violated,
        values=values,
        active=active,
        violated=tuple(_clause_text(c) for c in violated),
    )


def _clause_text(clause: Mapping[str, str]) -> str:
    return "{" + ", ".join(f"{k}={v}" for k, v in clause.items()) + "}"


_SET_RE = re.compile(r"^\{([^}]*)\}")
_RANGE_RE = re.compile(r"^\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]")
_DEFAULT_RE = re.compile(r"^\[([^\]]*)\]")
_SPECIAL_RE = re.compile(r"^special\{([^}]*)\}")
_CONDITION_RE = re.compile(r"^condition\s+(\S+)\s*\|\s*(\S+)\s+in\s*\{([^}]*)\}\s*$")
_FORBIDDEN_RE = re.compile(r"^forbidden\s*\{([^}]*)\}\s*$")


def _split_values(text: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _parse_param(line: str, number: int) -> ParamSpec:
    name, _, rest = line.partition(" ")
    rest = rest.strip()
    where = f"line {number}"

    def take(regex):
        nonlocal rest
        match = regex.match(rest)
        if not match:
            return None
        rest = rest[match.end():].strip()
        return match

    values_match = take(_SET_RE)
    if values_match:
        values = _split_values(values_match.group(1))
        default_match = take(_DEFAULT_RE)
        if not default_match:
            raise SpaceError(f"{where}: parameter '{name}' needs a [default]")
        kind = BOOLEAN if set(values) == {"true", "false"} else CATEGORICAL
        if not rest:
            raise SpaceError(f"{where}: parameter '{name}' needs a render template")
        return ParamSpec(
            name=name,
            kind=kind,
            default=default_match.group(1).strip(),
            template=rest,
            values=values,
        )

    range_match = take(_RANGE_RE)
    if not range_match:
        raise SpaceError(f"{where}: parameter '{name}' needs {{values}} or [lo,hi]")
    default_match = take(_DEFAULT_RE)
    if not default_match:
        raise SpaceError(f"{where}: parameter '{name}' needs a [default]")

    tokens = rest.split(None, 1)
    if not tokens or tokens[0] not in ("int", "float"):
        raise SpaceError(f"{where}: parameter '{name}' needs a type (int|float)")
    kind = INTEGER if tokens[0] == "int" else FLOAT
    rest = tokens[1].strip() if len(tokens) > 1 else ""

    distribution = UNIFORM
    tokens = rest.split(None, 1)
    if tokens and tokens[0] in ("uniform", "log"):
        distribution = UNIFORM if tokens[0] == "uniform" else LOG_UNIFORM
        rest = tokens[1].strip() if len(tokens) > 1 else ""

    special: Tuple[str, ...] = ()
    special_match = take(_SPECIAL_RE)
    if special_match:
        special = _split_values(special_match.group(1))

    if not rest:
        raise SpaceError(f"{where}: parameter '{name}' needs a render template")

    try:
        bounds = (float(range_match.group(1)), float(range_match.group(2)))
    except ValueError:
        raise SpaceError(f"{where}: parameter '{name}' has non-numeric bounds") from None

    spec = ParamSpec(
        name=name,
        kind=kind,
        default=default_match.group(1).strip(),
        template=rest,
        bounds=bounds,
        distribution=distribution,
        special_values=special,
    )
    # canonical text for default and special values
    try:
        return replace(
            spec,
            default=spec.normalize(spec.default),
            special_values=tuple(spec.normalize(v) for v in special),
        )
    except ValueError as e:
        raise SpaceError(f"{where}: {e}") from None


def parse_param_space(text: str) -> ParamSpace:
    params: List[ParamSpec] = []
    conditions: List[Tuple[int, str, Condition]] = []
    forbidden: List[Dict[str, str]] = []

    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cond_match = _CONDITION_RE.match(line)
        if cond_match:
            child, parent, values = cond_match.groups()
            conditions.append((number, child, Condition(parent, _split_values(values))))
            continue
        forbidden_match = _FORBIDDEN_RE.match(line)
        if forbidden_match:
            clause: Dict[str, str] = {}
            for item in _split_values(forbidden_match.group(1)):
                key, sep, value = item.partition("=")
                if not sep:
                    raise SpaceError(f"line {number}: malformed forbidden item '{item}'")
                clause[key.strip()] = value.strip()
            forbidden.append(clause)
            continue
        params.append(_parse_param(line, number))

    by_name = {p.name: p for p in params}
    if len(by_name) != len(params):
        return ParamSpace(params, forbidden)  # reports the duplicates
    for number, child, condition in conditions:
        if child not in by_name:
            raise SpaceError(f"line {number}: condition on unknown parameter '{child}'")
        spec = by_name[child]
        by_name[child] = replace(spec, conditions=spec.conditions + (condition,))

    return ParamSpace([by_name[p.name] for p in params], forbidden)


def load_param_space(path: Optional[Path]) -> ParamSpace:
    if path is None:
        return ParamSpace()
    if not path.exists():
        raise MissingFile(f"Parameter space file not found: {path}")
    return parse_param_space(path.read_text(encoding="utf-8"))
