"""Lossless srcML trees with addressable statement and number nodes."""

import copy
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from lxml import etree as et

from .errors import MissingFile, UnknownLocation, XmlError
from .patch import NUMBER_TAG, STMT_TAG, NodeRef

SRCML_NS = "http://www.srcML.org/srcML/src"
namespaces = {"src": SRCML_NS}

DEFAULT_STMT_TAGS: Tuple[str, ...] = (
    "break",
    "continue",
    "decl_stmt",
    "do",
    "expr_stmt",
    "for",
    "goto",
    "if",
    "return",
    "switch",
    "while",
)

_PROLOG_RE = re.compile(r"^(\s*<\?xml[^>]*\?>\s*)?")
_EPILOG_RE = re.compile(r"(\s*)$")


def tagname(node: et._Element) -> str:
    return et.QName(node).localname


def is_number(node: et._Element) -> bool:
    name = tagname(node)
    return name == NUMBER_TAG or (name == "literal" and node.get("type") == "number")


def source_text(node: et._Element) -> str:
    """Concatenated program text of a subtree, without the node's own tail."""
    parts: List[str] = []
    _collect_text(node, parts)
    return "".join(parts)


def _collect_text(node: et._Element, parts: List[str]) -> None:
    if isinstance(node.tag, str) and node.text:
        parts.append(node.text)
    for child in node:
        _collect_text(child, parts)
        if child.tail:
            parts.append(child.tail)


def _elements(root: et._Element) -> Iterable[et._Element]:
    return root.iter(et.Element)


@dataclass
class WorkingTree:
    """Private mutable copy of a SourceTree plus its original-node index."""

    root: et._Element
    statements: List[et._Element]
    numbers: List[et._Element]
    by_tag: Dict[str, List[et._Element]]

    def lookup(self, ref: NodeRef) -> et._Element:
        return _lookup(self.statements, self.numbers, self.by_tag, ref)

    def is_attached(self, node: et._Element) -> bool:
        """False once the node, or any of its ancestors, was removed."""
        while node is not None:
            if node is self.root:
                return True
            node = node.getparent()
        return False


class SourceTree:
    """One srcML file: an lxml tree plus pre-order statement/number indexes."""

    def __init__(self, file_id: str, xml_text: str, stmt_tags: Sequence[str] = DEFAULT_STMT_TAGS):
        self.file_id = file_id
        self.stmt_tags = tuple(stmt_tags)

        prolog = _PROLOG_RE.match(xml_text).group(0)
        rest = xml_text[len(prolog):]
        epilog = _EPILOG_RE.search(rest).group(1)
        body = rest[: len(rest) - len(epilog)] if epilog else rest
        self.prolog = prolog
        self.epilog = epilog

        parser = et.XMLParser(
            remove_blank_text=False,
            resolve_entities=False,
            strip_cdata=False,
            remove_comments=False,
            remove_pis=False,
        )
        try:
            self.root = et.fromstring(body, parser)
        except (et.XMLSyntaxError, ValueError) as e:
            raise XmlError(f"{file_id}: {e}") from None

        self.statements, self.numbers, self.by_tag = self._index(self.root)

    @classmethod
    def from_file(cls, path: Path, file_id: str, stmt_tags: Sequence[str] = DEFAULT_STMT_TAGS) -> "SourceTree":
        if not path.exists():
            raise MissingFile(f"Target file not found: {path}")
        return cls(file_id, path.read_bytes().decode("utf-8"), stmt_tags)

    def _index(self, root: et._Element):
        statements: List[et._Element] = []
        numbers: List[et._Element] = []
        by_tag: Dict[str, List[et._Element]] = {}
        for node in _elements(root):
            name = tagname(node)
            if name in self.stmt_tags:
                statements.append(node)
                by_tag.setdefault(name, []).append(node)
            elif is_number(node):
                numbers.append(node)
        return statements, numbers, by_tag

    @property
    def statement_count(self) -> int:
        return len(self.statements)

    @property
    def number_count(self) -> int:
        return len(self.numbers)

    def statement_refs(self) -> List[NodeRef]:
        return [NodeRef(self.file_id, STMT_TAG, i) for i in range(len(self.statements))]

    def number_refs(self) -> List[NodeRef]:
        return [NodeRef(self.file_id, NUMBER_TAG, i) for i in range(len(self.numbers))]

    def lookup(self, ref: NodeRef) -> et._Element:
        return _lookup(self.statements, self.numbers, self.by_tag, ref)

    def working_copy(self) -> WorkingTree:
        root = copy.deepcopy(self.root)
        statements, numbers, by_tag = self._index(root)
        return WorkingTree(root, statements, numbers, by_tag)

    def to_xml(self, root: Optional[et._Element] = None) -> str:
        node = self.root if root is None else root
        return self.prolog + et.tostring(node, encoding="unicode") + self.epilog

    def to_source(self, root: Optional[et._Element] = None) -> str:
        return source_text(self.root if root is None else root)


def _lookup(statements, numbers, by_tag, ref: NodeRef) -> et._Element:
    if ref.tag == STMT_TAG:
        pool = statements
    elif ref.tag == NUMBER_TAG:
        pool = numbers
    else:
        pool = by_tag.get(ref.tag, [])
    if ref.index >= len(pool):
        raise UnknownLocation(f"No node {ref.node()} in the original tree")
    return pool[ref.index]
