"""Edits, patches and the patch file format."""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, List, Optional, Tuple, Union

from .errors import ParseError


class EditKind(str, Enum):
    """The six edit types, in canonical order."""

    PARAM_SET = "ParamSet"
    STMT_DELETE = "StmtDelete"
    STMT_REPLACE = "StmtReplace"
    STMT_INSERT = "StmtInsert"
    CONSTANT_SET = "ConstantSet"
    CONSTANT_UPDATE = "ConstantUpdate"

    @classmethod
    def parse(cls, name: str) -> "EditKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(
            f"Unknown edit kind '{name}'. "
            f"Valid options: {', '.join(k.value for k in cls)}"
        )


ALL_KINDS: Tuple[EditKind, ...] = tuple(EditKind)
STATEMENT_KINDS = (EditKind.STMT_DELETE, EditKind.STMT_REPLACE, EditKind.STMT_INSERT)
CONSTANT_KINDS = (EditKind.CONSTANT_SET, EditKind.CONSTANT_UPDATE)

NUMBER_TAG = "number"
STMT_TAG = "stmt"

# Operator symbol -> suffix appended inside the wrapping parentheses.
UPDATE_OPERATORS: Tuple[str, ...] = ("+1", "-1", "*2", "/2", "*3/2", "*2/3")
CONSTANT_VALUES: Tuple[str, ...] = ("0", "1", "-1")


@dataclass(frozen=True)
class UpdateOperator:
    """Relative rewrite of a numerical constant."""

    symbol: str

    def __post_init__(self) -> None:
        if self.symbol not in UPDATE_OPERATORS:
            raise ValueError(
                f"Unknown update operator '{self.symbol}'. "
                f"Valid options: {', '.join(UPDATE_OPERATORS)}"
            )

    def __str__(self) -> str:
        return self.symbol


def apply_constant_update(expr_text: str, op: Union[UpdateOperator, str]) -> str:
    """Wrap an expression so that successive updates stack: E -> ((E)op)."""
    if not expr_text:
        raise ValueError("Cannot update an empty expression")
    symbol = op.symbol if isinstance(op, UpdateOperator) else UpdateOperator(op).symbol
    return f"(({expr_text}){symbol})"


_NODE_RE = re.compile(
    r"^(?P<file>.+)::(?P<tag>[A-Za-z_][\w.-]*)\[(?P<index>\d+)\]"
    r"(?::(?P<direction>before|after))?$"
)


@dataclass(frozen=True)
class NodeRef:
    """Address of one node of an ORIGINAL source tree.

    ``direction`` is only set for insertion points.
    """

    file: str
    tag: str
    index: int
    direction: Optional[str] = None

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"Negative node index in {self}")
        if self.direction not in (None, "before", "after"):
            raise ValueError(f"Invalid insertion direction '{self.direction}'")

    def node(self) -> "NodeRef":
        """The same address without insertion direction."""
        if self.direction is None:
            return self
        return NodeRef(self.file, self.tag, self.index)

    def __str__(self) -> str:
        text = f"{self.file}::{self.tag}[{self.index}]"
        if self.direction:
            text += f":{self.direction}"
        return text

    @classmethod
    def parse(cls, text: str) -> "NodeRef":
        match = _NODE_RE.match(text)
        if not match:
            raise ValueError(f"Malformed node reference '{text}'")
        return cls(
            file=match.group("file"),
            tag=match.group("tag"),
            index=int(match.group("index")),
            direction=match.group("direction"),
        )


Location = Union[NodeRef, str]
Ingredient = Union[None, str, NodeRef, UpdateOperator]


@dataclass(frozen=True)
class Edit:
    """An edit triplet: (kind, location, ingredient)."""

    kind: EditKind
    location: Location
    ingredient: Ingredient = None

    def __post_init__(self) -> None:
        kind, loc, ing = self.kind, self.location, self.ingredient
        if kind is EditKind.PARAM_SET:
            if not isinstance(loc, str) or not loc:
                raise ValueError("ParamSet location must be a parameter name")
            if not isinstance(ing, str):
                raise ValueError("ParamSet ingredient must be a value string")
            return

        if not isinstance(loc, NodeRef):
            raise ValueError(f"{kind.value} location must be a node reference")

        if kind in CONSTANT_KINDS:
            if loc.tag != NUMBER_TAG or loc.direction:
                raise ValueError(f"{kind.value} must target a '{NUMBER_TAG}' node")
            if kind is EditKind.CONSTANT_SET and not (isinstance(ing, str) and ing):
                raise ValueError("ConstantSet ingredient must be a literal")
            if kind is EditKind.CONSTANT_UPDATE and not isinstance(ing, UpdateOperator):
                raise ValueError("ConstantUpdate ingredient must be an update operator")
            return

        if loc.tag == NUMBER_TAG:
            raise ValueError(f"{kind.value} must target a statement node")
        if kind is EditKind.STMT_DELETE:
            if ing is not None:
                raise ValueError("StmtDelete takes no ingredient")
            if loc.direction:
                raise ValueError("StmtDelete location has no direction")
        elif kind is EditKind.STMT_REPLACE:
            if not isinstance(ing, NodeRef) or ing.direction or loc.direction:
                raise ValueError("StmtReplace needs a statement node as ingredient")
        elif kind is EditKind.STMT_INSERT:
            if loc.direction is None:
                raise ValueError("StmtInsert location needs a before/after direction")
            if not isinstance(ing, NodeRef) or ing.direction:
                raise ValueError("StmtInsert needs a statement node as ingredient")

    def __str__(self) -> str:
        args = [_quote(str(self.location))]
        if self.ingredient is not None:
            args.append(_quote(str(self.ingredient)))
        return f"{self.kind.value}({', '.join(args)})"

    # convenience constructors

    @classmethod
    def param_set(cls, name: str, value: str) -> "Edit":
        return cls(EditKind.PARAM_SET, name, value)

    @classmethod
    def stmt_delete(cls, target: NodeRef) -> "Edit":
        return cls(EditKind.STMT_DELETE, target)

    @classmethod
    def stmt_replace(cls, target: NodeRef, ingredient: NodeRef) -> "Edit":
        return cls(EditKind.STMT_REPLACE, target, ingredient)

    @classmethod
    def stmt_insert(cls, point: NodeRef, ingredient: NodeRef) -> "Edit":
        return cls(EditKind.STMT_INSERT, point, ingredient)

    @classmethod
    def constant_set(cls, target: NodeRef, literal: str) -> "Edit":
        return cls(EditKind.CONSTANT_SET, target, literal)

    @classmethod
    def constant_update(cls, target: NodeRef, symbol: str) -> "Edit":
        return cls(EditKind.CONSTANT_UPDATE, target, UpdateOperator(symbol))


@dataclass(frozen=True)
class Patch:
    """Ordered edit sequence. The empty patch is the unmodified software."""

    edits: Tuple[Edit, ...] = field(default_factory=tuple)

    def __init__(self, edits: Iterable[Edit] = ()):
        object.__setattr__(self, "edits", tuple(edits))

    def __len__(self) -> int:
        return len(self.edits)

    def __iter__(self) -> Iterator[Edit]:
        return iter(self.edits)

    def __getitem__(self, index: int) -> Edit:
        return self.edits[index]

    def __add__(self, other: "Patch") -> "Patch":
        return Patch(self.edits + tuple(other.edits))

    def append(self, edit: Edit) -> "Patch":
        return Patch(self.edits + (edit,))

    def without(self, index: int) -> "Patch":
        return Patch(self.edits[:index] + self.edits[index + 1:])

    def __str__(self) -> str:
        return serialize_patch(self)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


_STRING = r'"((?:[^"\\]|\\.)*)"'
_LINE_RE = re.compile(
    r"^(?P<kind>[A-Za-z]+)\(\s*(?:" + _STRING + r"(?:\s*,\s*" + _STRING + r")?)?\s*\)$"
)
_UNESCAPE_RE = re.compile(r"\\(.)")


def _unquote(text: str) -> str:
    return _UNESCAPE_RE.sub(r"\1", text)


def serialize_patch(patch: Patch) -> str:
    """One edit per line; the empty patch serializes to empty text."""
    return "".join(f"{edit}\n" for edit in patch)


def parse_edit(line: str, line_number: Optional[int] = None) -> Edit:
    """Parse a single edit line."""
    match = _LINE_RE.match(line.strip())
    if not match:
        raise ParseError(f"malformed edit '{line.strip()}'", line_number)

    try:
        kind = EditKind.parse(match.group("kind"))
    except ValueError as e:
        raise ParseError(str(e), line_number) from None

    raw = [g for g in (match.group(2), match.group(3)) if g is not None]
    args = [_unquote(a) for a in raw]
    expected = 1 if kind is EditKind.STMT_DELETE else 2
    if len(args) != expected:
        raise ParseError(
            f"{kind.value} takes {expected} argument(s), got {len(args)}", line_number
        )

    try:
        if kind is EditKind.PARAM_SET:
            return Edit.param_set(args[0], args[1])
        location = NodeRef.parse(args[0])
        if kind is EditKind.STMT_DELETE:
            return Edit.stmt_delete(location)
        if kind is EditKind.STMT_REPLACE:
            return Edit.stmt_replace(location, NodeRef.parse(args[1]))
        if kind is EditKind.STMT_INSERT:
            return Edit.stmt_insert(location, NodeRef.parse(args[1]))
        if kind is EditKind.CONSTANT_SET:
            return Edit.constant_set(location, args[1])
        return Edit.constant_update(location, args[1])
    except ValueError as e:
        raise ParseError(str(e), line_number) from None


def parse_patch(text: str) -> Patch:
    """Parse patch text; `#` comment lines and blank lines are ignored."""
    edits: List[Edit] = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        edits.append(parse_edit(stripped, number))
    return Patch(edits)
