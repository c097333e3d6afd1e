import numpy as np
import pytest

from magpie.errors import UnknownLocation
from magpie.params import parse_param_space
from magpie.patch import UPDATE_OPERATORS, Edit, NodeRef, Patch, apply_constant_update
from magpie.target import build_model
from magpie.variant import apply_patch

from conftest import C_SAMPLE, C_SAMPLE_SOURCE


def stmt(i: int) -> NodeRef:
    return NodeRef("main.c", "stmt", i)


def number(i: int) -> NodeRef:
    return NodeRef("main.c", "number", i)


@pytest.fixture
def model():
    space = parse_param_space("luby {true,false} [true] -luby={}\nphase {0,1,2} [2] -p={}\n")
    return build_model({"main.c": C_SAMPLE}, space)


def test_empty_patch_is_identity(model):
    artifacts = apply_patch(model, Patch())
    assert artifacts.sources["main.c"] == C_SAMPLE_SOURCE
    assert artifacts.xml["main.c"] == C_SAMPLE
    assert artifacts.assignment == {}
    assert artifacts.noops == ()


def test_delete_statement(model):
    artifacts = apply_patch(model, Patch([Edit.stmt_delete(stmt(1))]))
    assert "x = x * 2;" not in artifacts.sources["main.c"]
    assert "int x = 10;" in artifacts.sources["main.c"]


def test_edit_on_deleted_target_is_noop(model):
    patch = Patch([Edit.stmt_delete(stmt(1)), Edit.stmt_replace(stmt(1), stmt(4))])
    artifacts = apply_patch(model, patch)
    assert artifacts.noops == (1,)
    assert artifacts.sources["main.c"] == apply_patch(model, Patch([patch[0]])).sources["main.c"]


def test_edit_inside_deleted_subtree_is_noop(model):
    patch = Patch([Edit.stmt_delete(stmt(2)), Edit.stmt_delete(stmt(3))])
    artifacts = apply_patch(model, patch)
    assert artifacts.noops == (1,)
    assert "if" not in artifacts.sources["main.c"]


def test_deleted_ingredient_is_noop(model):
    patch = Patch([Edit.stmt_delete(stmt(4)), Edit.stmt_insert(NodeRef("main.c", "stmt", 0, "before"), stmt(4))])
    assert apply_patch(model, patch).noops == (1,)


def test_replace_uses_original_ingredient(model):
    patch = Patch([
        Edit.constant_set(number(0), "1"),
        Edit.stmt_replace(stmt(1), stmt(0)),
    ])
    source = apply_patch(model, patch).sources["main.c"]
    assert "    int x = 1;\n    int x = 10;\n" in source


def test_insert_before_and_after(model):
    before = apply_patch(model, Patch([Edit.stmt_insert(NodeRef("main.c", "stmt", 4, "before"), stmt(1))]))
    assert "    }\n    x = x * 2;\n    return x;\n" in before.sources["main.c"]
    after = apply_patch(model, Patch([Edit.stmt_insert(NodeRef("main.c", "stmt", 0, "after"), stmt(4))]))
    assert after.sources["main.c"].startswith("int main() {\n    int x = 10;\n    return x;\n    x = x * 2;\n")


def test_locations_always_refer_to_original_nodes(model):
    patch = Patch([
        Edit.stmt_insert(NodeRef("main.c", "stmt", 0, "before"), stmt(4)),
        Edit.stmt_delete(stmt(1)),
    ])
    source = apply_patch(model, patch).sources["main.c"]
    assert "x = x * 2;" not in source
    assert "int x = 10;" in source


def test_constant_updates_stack(model):
    patch = Patch([Edit.constant_update(number(0), "*2"), Edit.constant_update(number(0), "+1")])
    source = apply_patch(model, patch).sources["main.c"]
    assert "int x = ((((10)*2))+1);" in source


@pytest.mark.parametrize("seed", range(20))
def test_constant_update_sequence_matches_fold(model, seed):
    rng = np.random.default_rng(seed)
    target = int(rng.integers(0, 3))
    symbols = [str(s) for s in rng.choice(UPDATE_OPERATORS, size=int(rng.integers(1, 6)))]
    expected = ("10", "2", "5")[target]
    for symbol in symbols:
        expected = apply_constant_update(expected, symbol)

    patch = Patch([Edit.constant_update(number(target), s) for s in symbols])
    artifacts = apply_patch(model, patch)
    lines = artifacts.sources["main.c"].splitlines()
    original = C_SAMPLE_SOURCE.splitlines()
    changed = [line for line, before in zip(lines, original) if line != before]
    assert len(changed) == 1
    assert expected in changed[0]


def test_constant_set(model):
    source = apply_patch(model, Patch([Edit.constant_set(number(2), "-1")])).sources["main.c"]
    assert "if (x > -1)" in source


def test_param_set_later_edit_wins(model):
    patch = Patch([Edit.param_set("luby", "false"), Edit.param_set("phase", "0"), Edit.param_set("luby", "true")])
    artifacts = apply_patch(model, patch)
    assert artifacts.assignment == {"luby": "true", "phase": "0"}
    assert artifacts.sources["main.c"] == C_SAMPLE_SOURCE


def test_original_model_is_untouched(model):
    apply_patch(model, Patch([Edit.stmt_delete(stmt(0)), Edit.constant_set(number(1), "0")]))
    assert apply_patch(model, Patch()).sources["main.c"] == C_SAMPLE_SOURCE


@pytest.mark.parametrize(
    "edit",
    [
        Edit.stmt_delete(NodeRef("main.c", "stmt", 9)),
        Edit.stmt_delete(NodeRef("other.c", "stmt", 0)),
        Edit.constant_set(NodeRef("main.c", "number", 3), "0"),
        Edit.param_set("restarts", "1"),
        Edit.stmt_replace(NodeRef("main.c", "stmt", 0), NodeRef("main.c", "stmt", 7)),
    ],
)
def test_unknown_locations(model, edit):
    with pytest.raises(UnknownLocation):
        apply_patch(model, Patch([edit]))


def test_unknown_location_raises_even_after_deletion(model):
    patch = Patch([Edit.stmt_delete(stmt(2)), Edit.stmt_delete(NodeRef("main.c", "stmt", 5))])
    with pytest.raises(UnknownLocation):
        apply_patch(model, patch)
