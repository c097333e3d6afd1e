"""Target model: source trees, parameter space and the edit spaces they induce."""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence

import numpy as np

from .errors import EmptySpace, UnknownLocation
from .params import DEFAULT_SPECIAL_WEIGHT, ParamSpace, load_param_space
from .patch import (
    ALL_KINDS,
    CONSTANT_VALUES,
    UPDATE_OPERATORS,
    Edit,
    EditKind,
    NodeRef,
)
from .srcml import DEFAULT_STMT_TAGS, SourceTree

if TYPE_CHECKING:
    from .config import Scenario

DEFAULT_SAMPLES_PER_NUMERIC_PARAM = 10


@dataclass
class TargetModel:
    """Immutable view of a scenario's editable assets."""

    trees: Dict[str, SourceTree] = field(default_factory=dict)
    param_space: ParamSpace = field(default_factory=ParamSpace)

    @property
    def files(self) -> List[str]:
        return list(self.trees)

    def statement_refs(self) -> List[NodeRef]:
        return [ref for tree in self.trees.values() for ref in tree.statement_refs()]

    def number_refs(self) -> List[NodeRef]:
        return [ref for tree in self.trees.values() for ref in tree.number_refs()]

    def tree(self, file_id: str) -> SourceTree:
        if file_id not in self.trees:
            raise UnknownLocation(f"No target file '{file_id}'")
        return self.trees[file_id]

    def original_sources(self) -> Dict[str, str]:
        return {file_id: tree.to_source() for file_id, tree in self.trees.items()}


def parse_target(scenario: "Scenario") -> TargetModel:
    """Parse the scenario's srcML files and parameter space into a TargetModel."""
    trees: Dict[str, SourceTree] = {}
    for path, file_id in zip(scenario.target_files, scenario.file_ids):
        trees[file_id] = SourceTree.from_file(path, file_id, scenario.stmt_tags)
    return TargetModel(trees=trees, param_space=load_param_space(scenario.param_space_file))


def build_model(
    sources: Mapping[str, str],
    param_space: Optional[ParamSpace] = None,
    stmt_tags: Sequence[str] = DEFAULT_STMT_TAGS,
) -> TargetModel:
    """Model from in-memory srcML texts keyed by file id."""
    trees = {file_id: SourceTree(file_id, text, stmt_tags) for file_id, text in sources.items()}
    return TargetModel(trees=trees, param_space=param_space or ParamSpace())


@dataclass
class EditFamily:
    """Size of one edit kind's space plus a way to iterate it."""

    kind: EditKind
    count: int
    _factory: Callable[[], Iterator[Edit]] = field(repr=False)

    def __iter__(self) -> Iterator[Edit]:
        return self._factory()


def _iter_deletions(model: TargetModel) -> Iterator[Edit]:
    for ref in model.statement_refs():
        yield Edit.stmt_delete(ref)


def _iter_replacements(model: TargetModel) -> Iterator[Edit]:
    for tree in model.trees.values():
        refs = tree.statement_refs()
        for target in refs:
            for ingredient in refs:
                if ingredient != target:
                    yield Edit.stmt_replace(target, ingredient)


def _iter_insertions(model: TargetModel) -> Iterator[Edit]:
    for tree in model.trees.values():
        refs = tree.statement_refs()
        for target in refs:
            for direction in ("before", "after"):
                point = NodeRef(target.file, target.tag, target.index, direction)
                for ingredient in refs:
                    yield Edit.stmt_insert(point, ingredient)


def _iter_constant_sets(model: TargetModel) -> Iterator[Edit]:
    for ref in model.number_refs():
        for literal in CONSTANT_VALUES:
            yield Edit.constant_set(ref, literal)


def _iter_constant_updates(model: TargetModel) -> Iterator[Edit]:
    for ref in model.number_refs():
        for symbol in UPDATE_OPERATORS:
            yield Edit.constant_update(ref, symbol)


def _param_values(
    model: TargetModel,
    samples_per_numeric_param: int,
    rng: np.random.Generator,
    special_weight: float,
) -> List[Edit]:
    edits = []
    for spec in model.param_space.params:
        if spec.is_finite:
            values = spec.domain_values()
        else:
            values = [spec.sample(rng, special_weight) for _ in range(samples_per_numeric_param)]
        edits.extend(Edit.param_set(spec.name, v) for v in values)
    return edits


def enumerate_edit_space(
    model: TargetModel,
    families: Iterable[EditKind] = ALL_KINDS,
    samples_per_numeric_param: int = DEFAULT_SAMPLES_PER_NUMERIC_PARAM,
    rng: Optional[np.random.Generator] = None,
    special_weight: float = DEFAULT_SPECIAL_WEIGHT,
) -> Dict[EditKind, EditFamily]:
    """Per-kind edit counts and iterators.

    Continuous and large integer parameters contribute
    ``samples_per_numeric_param`` freshly sampled values per call.
    """
    wanted = set(families)
    sizes = {file_id: tree.statement_count for file_id, tree in model.trees.items()}
    constants = sum(tree.number_count for tree in model.trees.values())
    rng = rng if rng is not None else np.random.default_rng()

    result: Dict[EditKind, EditFamily] = {}
    for kind in ALL_KINDS:
        if kind not in wanted:
            continue
        if kind is EditKind.STMT_DELETE:
            family = EditFamily(kind, sum(sizes.values()), lambda: _iter_deletions(model))
        elif kind is EditKind.STMT_REPLACE:
            family = EditFamily(
                kind, sum(s * (s - 1) for s in sizes.values()), lambda: _iter_replacements(model)
            )
        elif kind is EditKind.STMT_INSERT:
            family = EditFamily(
                kind, sum(2 * s * s for s in sizes.values()), lambda: _iter_insertions(model)
            )
        elif kind is EditKind.CONSTANT_SET:
            family = EditFamily(
                kind, len(CONSTANT_VALUES) * constants, lambda: _iter_constant_sets(model)
            )
        elif kind is EditKind.CONSTANT_UPDATE:
            family = EditFamily(
                kind, len(UPDATE_OPERATORS) * constants, lambda: _iter_constant_updates(model)
            )
        else:
            edits = _param_values(model, samples_per_numeric_param, rng, special_weight)
            family = EditFamily(kind, len(edits), lambda edits=edits: iter(edits))
        result[kind] = family
    return result


def has_edits(model: TargetModel, kind: EditKind) -> bool:
    """Whether ``kind`` has at least one possible edit on this model."""
    if kind is EditKind.PARAM_SET:
        return len(model.param_space) > 0
    if kind in (EditKind.CONSTANT_SET, EditKind.CONSTANT_UPDATE):
        return any(t.number_count for t in model.trees.values())
    if kind is EditKind.STMT_REPLACE:
        return any(t.statement_count > 1 for t in model.trees.values())
    return any(t.statement_count for t in model.trees.values())


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def sample_random_edit(
    model: TargetModel,
    kind: EditKind,
    rng: np.random.Generator,
    special_weight: float = DEFAULT_SPECIAL_WEIGHT,
) -> Edit:
    """Draw one edit of ``kind``: uniform location, then ingredient per kind."""
    if not has_edits(model, kind):
        raise EmptySpace(f"No possible {kind.value} edit on this target")

    if kind is EditKind.PARAM_SET:
        spec = _pick(rng, model.param_space.params)
        return Edit.param_set(spec.name, spec.sample(rng, special_weight))

    if kind in (EditKind.CONSTANT_SET, EditKind.CONSTANT_UPDATE):
        target = _pick(rng, model.number_refs())
        if kind is EditKind.CONSTANT_SET:
            return Edit.constant_set(target, _pick(rng, CONSTANT_VALUES))
        return Edit.constant_update(target, _pick(rng, UPDATE_OPERATORS))

    if kind is EditKind.STMT_DELETE:
        return Edit.stmt_delete(_pick(rng, model.statement_refs()))

    if kind is EditKind.STMT_REPLACE:
        # a lone statement has no replacement ingredient
        targets = [
            ref
            for tree in model.trees.values()
            if tree.statement_count > 1
            for ref in tree.statement_refs()
        ]
        target = _pick(rng, targets)
        refs = model.tree(target.file).statement_refs()
        ingredient = _pick(rng, [r for r in refs if r != target])
        return Edit.stmt_replace(target, ingredient)

    target = _pick(rng, model.statement_refs())
    direction = _pick(rng, ("before", "after"))
    point = NodeRef(target.file, target.tag, target.index, direction)
    ingredient = _pick(rng, model.tree(target.file).statement_refs())
    return Edit.stmt_insert(point, ingredient)
