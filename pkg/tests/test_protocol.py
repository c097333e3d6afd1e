import numpy as np
import pytest

from magpie.errors import CombineError, FoldError, ScenarioError, ZeroBaseline
from magpie.evaluator import FitnessReport, VariantStatus, compare
from magpie.fixtures import load_toy, subset_optimum
from magpie.patch import Edit, EditKind, NodeRef, Patch
from magpie.protocol import (
    CampaignConfig,
    combine,
    defined_improvement,
    improvement_percent,
    make_fold_plan,
    minimize,
    rank_edit_impacts,
    report_improvement,
    run_campaign,
)
from magpie.search import SearchConfig

from conftest import copy_toy


ON = "on"


def flag(name: str, value: str = ON) -> Edit:
    return Edit.param_set(name, value)


# -- folds ---------------------------------------------------------------------


def test_two_folds_over_four_instances():
    plan = make_fold_plan(["a", "b", "c", "d"], k=2, seed=0)
    first, second = plan.folds
    assert len(first.members) == len(second.members) == 2
    assert set(first.validation) == set(second.members)
    assert set(second.validation) == set(first.members)
    assert first.training == first.members


def test_ten_folds_over_hundred_instances():
    instances = [f"i{n}" for n in range(100)]
    plan = make_fold_plan(instances, k=10, seed=42)
    assert [len(f.members) for f in plan.folds] == [10] * 10
    assert all(len(f.training) == 10 and len(f.validation) == 90 for f in plan.folds)
    assert sorted(m for f in plan.folds for m in f.members) == sorted(instances)


def test_training_is_capped():
    plan = make_fold_plan([str(n) for n in range(60)], k=2, seed=1, cap=10)
    assert [len(f.training) for f in plan.folds] == [10, 10]
    assert [len(f.validation) for f in plan.folds] == [30, 30]


def test_fold_plan_depends_only_on_seed():
    instances = [str(n) for n in range(20)]
    assert make_fold_plan(instances, 4, seed=5) == make_fold_plan(instances, 4, seed=5)
    assert make_fold_plan(instances, 4, seed=5).order != make_fold_plan(instances, 4, seed=6).order


def test_fold_count_limits():
    with pytest.raises(FoldError):
        make_fold_plan(["a", "b", "c"], k=4)
    with pytest.raises(FoldError):
        make_fold_plan(["a", "b", "c"], k=1)


# -- minimization --------------------------------------------------------------


def test_single_improving_edit_is_kept(param_knob):
    evaluator = param_knob.evaluator()
    patch = Patch([Edit.param_set("level", "8")])
    result = minimize(evaluator, patch, ["10", "20"])
    assert result.patch == patch
    assert result.phase == "A"


def test_neutral_edit_is_dropped(flag_pairs):
    evaluator = flag_pairs.evaluator()
    result = minimize(evaluator, Patch([flag("alpha"), flag("eta")]), ["1"])
    assert result.patch == Patch([flag("alpha")])
    assert result.report.objectives == (90.0,)


def test_interacting_pair_survives_in_phase_b(flag_pairs):
    evaluator = flag_pairs.evaluator()
    patch = Patch([flag("gamma"), flag("eta"), flag("delta")])
    result = minimize(evaluator, patch, ["1"])
    assert result.phase == "B"
    assert result.patch == Patch([flag("gamma"), flag("delta")])
    assert result.report.objectives == (80.0,)


def test_empty_patch_minimizes_to_baseline(flag_pairs):
    result = minimize(flag_pairs.evaluator(), Patch(), ["1"])
    assert result.patch == Patch()
    assert result.report.objectives == (100.0,)


def _flag_patch(space, names, rng: np.random.Generator) -> Patch:
    edits = []
    for name in names:
        values = space.get(str(name)).domain_values()
        edits.append(flag(str(name), values[int(rng.integers(len(values)))]))
    return Patch(edits)


def _random_flag_patch(space, rng: np.random.Generator) -> Patch:
    size = int(rng.integers(1, len(space.names) + 1))
    return _flag_patch(space, rng.choice(space.names, size=size, replace=False), rng)


def _no_single_removal_helps(evaluator, patch: Patch, report: FitnessReport, instances) -> bool:
    return all(
        compare(evaluator.evaluate(patch.without(i), instances), report) > 0 for i in range(len(patch))
    )


def test_minimization_matches_subset_oracle(flag_pairs):
    evaluator = flag_pairs.evaluator()
    rng = np.random.default_rng(2024)
    lengths = set()
    for _ in range(100):
        patch = _random_flag_patch(flag_pairs.model.param_space, rng)
        lengths.add(len(patch))
        result = minimize(evaluator, patch, ["1"])
        oracle = subset_optimum(evaluator, patch, ["1"])
        assert result.report.objectives == oracle.report.objectives, str(patch)
        assert len(result.patch) == len(oracle.patch), str(patch)
        assert _no_single_removal_helps(evaluator, result.patch, result.report, ["1"]), str(patch)
    assert 8 in lengths


def test_full_length_patches_minimize_to_the_optimum(flag_pairs):
    evaluator = flag_pairs.evaluator()
    space = flag_pairs.model.param_space
    for seed in range(5):
        rng = np.random.default_rng(seed)
        patch = _flag_patch(space, rng.permutation(space.names), rng)
        assert len(patch) == 8
        result = minimize(evaluator, patch, ["1"])
        oracle = subset_optimum(evaluator, patch, ["1"])
        assert result.report.objectives == oracle.report.objectives, str(patch)
        assert len(result.patch) == len(oracle.patch), str(patch)


def test_minimization_with_mixed_families(knob_and_stmt):
    evaluator = knob_and_stmt.evaluator()
    instances = knob_and_stmt.train_instances()[:2]
    deletions = [Edit.stmt_delete(NodeRef("prog.py", "stmt", i)) for i in (3, 4, 5)]
    rng = np.random.default_rng(11)
    for _ in range(8):
        picked = [deletions[i] for i in rng.permutation(3)[: int(rng.integers(1, 4))]]
        edits = [Edit.param_set("level", str(int(rng.integers(1, 9))))] + picked
        patch = Patch(edits[i] for i in rng.permutation(len(edits)))
        result = minimize(evaluator, patch, instances)
        oracle = subset_optimum(evaluator, patch, instances)
        assert result.report.objectives == oracle.report.objectives, str(patch)
        assert len(result.patch) == len(oracle.patch), str(patch)
        assert _no_single_removal_helps(evaluator, result.patch, result.report, instances), str(patch)


# -- combination ---------------------------------------------------------------


def test_combine_independent_gains(knob_and_stmt):
    evaluator = knob_and_stmt.evaluator()
    instances = knob_and_stmt.train_instances()
    knob = Patch([Edit.param_set("level", "8")])
    loop = Patch([Edit.stmt_delete(NodeRef("prog.py", "stmt", 3))])
    result = combine(evaluator, [knob, loop], instances)
    assert set(result.patch) == {knob[0], loop[0]}
    knob_cost = evaluator.evaluate(knob, instances).objectives
    loop_cost = evaluator.evaluate(loop, instances).objectives
    assert result.report.objectives <= min(knob_cost, loop_cost)
    assert result.report.objectives == (25.0,)


def test_combine_conflicting_values_keeps_one(param_knob):
    evaluator = param_knob.evaluator()
    result = combine(
        evaluator,
        [Patch([Edit.param_set("level", "8")]), Patch([Edit.param_set("level", "5")])],
        ["10", "20"],
    )
    assert len([e for e in result.patch if e.location == "level"]) <= 1
    assert result.report.objectives == (15.0,)


def test_combine_needs_two_patches(param_knob):
    with pytest.raises(CombineError):
        combine(param_knob.evaluator(), [Patch([Edit.param_set("level", "8")])], ["10"])


def test_combine_matches_subset_oracle_over_seeds(flag_pairs):
    evaluator = flag_pairs.evaluator()
    space = flag_pairs.model.param_space
    for seed in range(6):
        rng = np.random.default_rng(seed)
        names = rng.permutation(space.names)
        cut = int(rng.integers(1, len(names)))
        patches = [_flag_patch(space, names[:cut], rng), _flag_patch(space, names[cut:], rng)]
        result = combine(evaluator, patches, ["1"])
        oracle = subset_optimum(evaluator, patches[0] + patches[1], ["1"])
        assert result.report.objectives == oracle.report.objectives, seed
        assert len(result.patch) == len(oracle.patch), seed
        for patch in patches:
            assert compare(result.report, evaluator.evaluate(patch, ["1"])) <= 0


# -- reporting -----------------------------------------------------------------


@pytest.mark.parametrize(
    "baseline,variant,expected",
    [
        (8560025063208.7, 7806500120218, -8.80),
        (84336965193275, 7806500120218, -90.74),
        (13884363297634.4, 12202547786121, -12.11),
        (42.0, 42.0, 0.0),
    ],
)
def test_improvement_percent(baseline, variant, expected):
    assert improvement_percent(baseline, variant) == expected


def test_zero_baseline():
    with pytest.raises(ZeroBaseline):
        improvement_percent(0.0, 1.0)


def test_report_improvement_needs_clean_reports():
    clean = FitnessReport(VariantStatus.CLEAN, objectives=(2.0, 4.0))
    faster = FitnessReport(VariantStatus.CLEAN, objectives=(1.0, 5.0))
    assert report_improvement(clean, faster) == (-50.0, 25.0)
    with pytest.raises(ValueError):
        report_improvement(clean, FitnessReport(VariantStatus.TIMEOUT))


def test_defined_improvement_skips_zero_baselines():
    baseline = FitnessReport(VariantStatus.CLEAN, objectives=(0.0, 200.0))
    variant = FitnessReport(VariantStatus.CLEAN, objectives=(0.0, 150.0))
    assert defined_improvement(baseline, variant) == (None, -25.0)
    with pytest.raises(ZeroBaseline):
        report_improvement(baseline, variant)


class _FixedBaseline:
    process_slots = 1

    def baseline(self, instances):
        return FitnessReport(VariantStatus.CLEAN, objectives=(100.0,))

    def evaluate(self, patch, instances, use_cache=True):
        raise AssertionError("every solo report is supplied")


def test_impact_row_counts_runs():
    tree_loop_im = flag("loop-im")
    other = flag("inline")
    patches = [Patch([tree_loop_im, other])] * 7 + [Patch([other])] * 3
    solo = {
        tree_loop_im: FitnessReport(VariantStatus.CLEAN, objectives=(96.4,)),
        other: FitnessReport(VariantStatus.CLEAN, objectives=(99.5,)),
    }
    rows = rank_edit_impacts(_FixedBaseline(), patches, ["x"], solo=solo)
    assert [(r.edit, r.occurrences, r.improvement) for r in rows] == [(tree_loop_im, 7, (-3.6,))]


def test_impacts_on_flag_pairs(flag_pairs):
    evaluator = flag_pairs.evaluator()
    patches = [
        Patch([flag("alpha"), flag("eta")]),
        Patch([flag("alpha"), flag("alpha"), flag("beta")]),
        Patch([flag("eps", "high")]),
    ]
    rows = rank_edit_impacts(evaluator, patches, ["1"])
    assert [(str(r.edit), r.occurrences, r.improvement) for r in rows] == [
        ('ParamSet("alpha", "on")', 2, (-10.0,)),
        ('ParamSet("beta", "on")', 1, (-6.0,)),
    ]
    assert rank_edit_impacts(evaluator, patches, ["1"], threshold=50.0) == []


class _CountingEvaluator:
    """Counts single-edit evaluations made through it."""

    process_slots = 1

    def __init__(self, inner):
        self.inner = inner
        self.solo_calls = 0

    def baseline(self, instances):
        return self.inner.baseline(instances)

    def evaluate(self, patch, instances, use_cache=True):
        if len(patch) == 1:
            self.solo_calls += 1
        return self.inner.evaluate(patch, instances, use_cache)


def test_impacts_reuse_phase_a_solo_runs(flag_pairs):
    patch = Patch([flag("alpha"), flag("eta"), flag("beta")])
    result = minimize(flag_pairs.evaluator(), patch, ["1"])
    assert set(result.solo_reports()) == set(patch)

    counting = _CountingEvaluator(flag_pairs.evaluator())
    rows = rank_edit_impacts(counting, [patch], ["1"], solo=result.solo_reports())
    assert counting.solo_calls == 0
    assert [(str(r.edit), r.improvement) for r in rows] == [
        ('ParamSet("alpha", "on")', (-10.0,)),
        ('ParamSet("beta", "on")', (-6.0,)),
    ]


# -- campaign ------------------------------------------------------------------


def _config(budget: int, **kwargs) -> CampaignConfig:
    search = SearchConfig(families=(EditKind.PARAM_SET,), budget=budget, seed=0)
    return CampaignConfig(search=search, **kwargs)


def test_campaign_finds_the_best_configuration(param_knob):
    evaluator = param_knob.evaluator()
    result = run_campaign(
        evaluator, param_knob.train_instances(), param_knob.test_instances(), _config(100, k=3)
    )
    assert len(result.folds) == 3
    assert result.baseline_test_report.objectives == (240.0,)
    assert result.test_report.objectives == (30.0,)
    assert result.improvement == (-87.5,)
    assert Edit.param_set("level", "8") in result.selected
    assert result.to_dict()["selected_fold"] == result.selected_fold


def test_campaign_with_nothing_found(param_knob):
    evaluator = param_knob.evaluator()
    result = run_campaign(
        evaluator, param_knob.train_instances(), param_knob.test_instances(), _config(0, k=3)
    )
    assert result.selected == Patch()
    assert result.selected_fold is None
    assert result.improvement == (0.0,)


def test_campaign_repeats_test_measurements(param_knob):
    evaluator = param_knob.evaluator()
    result = run_campaign(
        evaluator, param_knob.train_instances(), param_knob.test_instances(),
        _config(0, k=3, test_repeats=2),
    )
    assert set(result.test_stability) == {"baseline", "selected"}
    assert result.test_stability["baseline"][0].mean == 240.0
    assert "test_stability" in result.to_dict()


def test_campaign_rejects_overlap(param_knob):
    train = param_knob.train_instances()
    with pytest.raises(ScenarioError):
        run_campaign(param_knob.evaluator(), train, train[:2], _config(0, k=3))


def test_parallel_folds_match_sequential_folds(param_knob):
    train, test = param_knob.train_instances(), param_knob.test_instances()
    sequential = run_campaign(param_knob.evaluator(), train, test, _config(40, k=3))
    parallel = run_campaign(param_knob.evaluator(process_slots=3), train, test, _config(40, k=3))
    assert [o.trace.to_jsonl() for o in parallel.folds] == [o.trace.to_jsonl() for o in sequential.folds]
    assert [o.fold.index for o in parallel.folds] == [0, 1, 2]
    assert parallel.selected == sequential.selected
    assert parallel.improvement == sequential.improvement


def test_campaign_with_a_zero_baseline_objective(tmp_path):
    copy_toy("param-knob", tmp_path)
    scenario = tmp_path / "param-knob" / "scenario.cfg"
    text = scenario.read_text(encoding="utf-8").replace("objectives = cost", "objectives = err, cost")
    scenario.write_text(text + "measure.err = output_regex (0)\n", encoding="utf-8")
    # every cost printed for these sizes contains a zero
    (tmp_path / "param-knob" / "test.txt").write_text("200\n300\n", encoding="utf-8")
    toy = load_toy("param-knob", tmp_path)

    result = run_campaign(toy.evaluator(), toy.train_instances(), toy.test_instances(), _config(30, k=3))
    assert all(outcome.ratio[0] == 1.0 for outcome in result.folds)
    assert result.baseline_test_report.objectives == (0.0, 2000.0)
    assert result.improvement[0] is None
    assert result.to_dict()["improvement"][0] is None
