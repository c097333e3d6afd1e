import pytest

from magpie.errors import MissingFile, SpaceTooLarge
from magpie.fixtures import FIXTURES_DIR, TOY_NAMES, brute_force_optimum, load_toy, subset_optimum
from magpie.patch import Edit, EditKind, NodeRef, Patch


@pytest.mark.parametrize("name", TOY_NAMES)
def test_every_toy_loads(name):
    toy = load_toy(name)
    assert toy.directory == FIXTURES_DIR / name
    assert toy.model.files == ["prog.py"]
    assert toy.train_instances()
    assert toy.test_instances()
    assert not set(toy.train_instances()) & set(toy.test_instances())


def test_unknown_toy():
    with pytest.raises(MissingFile):
        load_toy("no-such-toy")


def test_param_knob_oracle_matches_cost_model(param_knob):
    evaluator = param_knob.evaluator()
    instances = ["10", "30"]
    oracle = brute_force_optimum(evaluator, [EditKind.PARAM_SET], 1, instances)
    assert oracle.patch == Patch([Edit.param_set("level", "8")])
    # size * (9 - level)
    assert oracle.report.objectives == (20.0,)
    assert oracle.candidates == 9
    assert oracle.distinct == 8


def test_empty_family_set_returns_baseline(param_knob):
    oracle = brute_force_optimum(param_knob.evaluator(), [], 2, ["10"])
    assert oracle.patch == Patch()
    assert oracle.report.objectives == (80.0,)


def test_dead_stmt_oracle(dead_stmt):
    oracle = brute_force_optimum(dead_stmt.evaluator(), [EditKind.STMT_DELETE], 1, ["10"])
    assert oracle.patch == Patch([Edit.stmt_delete(NodeRef("prog.py", "stmt", 2))])
    assert oracle.report.objectives == (30.0,)


def test_oracle_cap(flag_pairs):
    with pytest.raises(SpaceTooLarge):
        brute_force_optimum(flag_pairs.evaluator(), [EditKind.PARAM_SET], 3, ["1"], cap=100)


def test_subset_oracle_prefers_shorter_patches(flag_pairs):
    patch = Patch([Edit.param_set("eta", "on"), Edit.param_set("beta", "on"), Edit.param_set("zeta", "on")])
    oracle = subset_optimum(flag_pairs.evaluator(), patch, ["1"])
    assert oracle.patch == Patch([Edit.param_set("beta", "on")])
    assert oracle.candidates == 8
