"""Applying patches to a target model."""

import copy
import re
from dataclasses import dataclass, field
from typing import Dict, Tuple

from lxml import etree as et

from .errors import UnknownLocation
from .patch import Edit, EditKind, NodeRef, Patch, apply_constant_update
from .srcml import WorkingTree, source_text
from .target import TargetModel

_LINE_INDENT_RE = re.compile(r"\n[ \t]*$")


@dataclass(frozen=True)
class VariantArtifacts:
    """Rendered result of a patch: per-file texts plus parameter assignment."""

    sources: Dict[str, str]
    xml: Dict[str, str]
    assignment: Dict[str, str] = field(default_factory=dict)
    noops: Tuple[int, ...] = ()


def _remove_keeping_tail(node: et._Element) -> None:
    parent = node.getparent()
    tail = node.tail
    if tail:
        previous = node.getprevious()
        if previous is not None:
            previous.tail = (previous.tail or "") + tail
        else:
            parent.text = (parent.text or "") + tail
    parent.remove(node)


def _separator(node: et._Element) -> str:
    """Line break and indentation that precede ``node`` in its block."""
    previous = node.getprevious()
    text = (previous.tail if previous is not None else node.getparent().text) or ""
    match = _LINE_INDENT_RE.search(text)
    return match.group(0) if match else "\n"


def _fresh_copy(node: et._Element) -> et._Element:
    clone = copy.deepcopy(node)
    clone.tail = None
    return clone


def _set_text(node: et._Element, text: str) -> None:
    for child in list(node):
        node.remove(child)
    node.text = text


class _Application:
    """One pass of a patch over private working copies."""

    def __init__(self, model: TargetModel):
        self.model = model
        self.working: Dict[str, WorkingTree] = {}
        self.assignment: Dict[str, str] = {}

    def tree_for(self, ref: NodeRef) -> WorkingTree:
        tree = self.model.tree(ref.file)
        tree.lookup(ref.node())
        if ref.file not in self.working:
            self.working[ref.file] = tree.working_copy()
        return self.working[ref.file]

    def original(self, ref: NodeRef) -> et._Element:
        return self.model.tree(ref.file).lookup(ref.node())

    def apply(self, edit: Edit) -> bool:
        """Apply one edit; False when it is a no-op on deleted material."""
        if edit.kind is EditKind.PARAM_SET:
            if edit.location not in self.model.param_space:
                raise UnknownLocation(f"Unknown parameter '{edit.location}'")
            self.assignment[edit.location] = edit.ingredient
            return True

        work = self.tree_for(edit.location)
        target = work.lookup(edit.location.node())
        ingredient = None
        if isinstance(edit.ingredient, NodeRef):
            if edit.ingredient.file != edit.location.file:
                raise UnknownLocation(
                    f"Ingredient {edit.ingredient} is not in file '{edit.location.file}'"
                )
            self.original(edit.ingredient)
            ingredient = work.lookup(edit.ingredient)

        if not work.is_attached(target):
            return False
        if ingredient is not None and not work.is_attached(ingredient):
            return False

        if edit.kind is EditKind.STMT_DELETE:
            _remove_keeping_tail(target)
        elif edit.kind is EditKind.STMT_REPLACE:
            clone = _fresh_copy(self.original(edit.ingredient))
            clone.tail = target.tail
            target.getparent().replace(target, clone)
        elif edit.kind is EditKind.STMT_INSERT:
            clone = _fresh_copy(self.original(edit.ingredient))
            separator = _separator(target)
            if edit.location.direction == "before":
                clone.tail = separator
                target.addprevious(clone)
            else:
                clone.tail = target.tail
                target.tail = separator
                target.addnext(clone)
        elif edit.kind is EditKind.CONSTANT_SET:
            _set_text(target, edit.ingredient)
        else:
            _set_text(target, apply_constant_update(source_text(target), edit.ingredient))
        return True


def apply_patch(model: TargetModel, patch: Patch) -> VariantArtifacts:
    """Apply ``patch`` in order; edits on already-deleted nodes are no-ops.

    Locations always refer to ORIGINAL nodes. Raises UnknownLocation when a
    location does not exist in the original model.
    """
    application = _Application(model)
    noops = tuple(i for i, edit in enumerate(patch) if not application.apply(edit))

    sources: Dict[str, str] = {}
    xml: Dict[str, str] = {}
    for file_id, tree in model.trees.items():
        work = application.working.get(file_id)
        root = work.root if work is not None else None
        sources[file_id] = tree.to_source(root)
        xml[file_id] = tree.to_xml(root)
    return VariantArtifacts(
        sources=sources,
        xml=xml,
        assignment=dict(application.assignment),
        noops=noops,
    )
