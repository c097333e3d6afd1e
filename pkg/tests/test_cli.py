import json
import re

import pytest

from magpie import __version__
from magpie.cli import build_parser, main, parse_families
from magpie.errors import ConfigError
from magpie.evaluator import FitnessReport, VariantStatus
from magpie.patch import ALL_KINDS, EditKind

from conftest import copy_toy


@pytest.fixture
def knob(tmp_path):
    return copy_toy("param-knob", tmp_path)


def scenario_args(toy):
    return ["--scenario", str(toy.directory / "scenario.cfg")]


def test_enumerate_prints_family_counts(knob, capsys):
    assert main(["enumerate", *scenario_args(knob)]) == 0
    out = capsys.readouterr().out
    assert re.search(r"ParamSet\s+\| 8\n", out)
    assert re.search(r"StmtDelete\s+\| 3\n", out)
    assert re.search(r"StmtInsert\s+\| 18\n", out)
    assert re.search(r"total\s+\| 35", out)


def test_enumerate_selected_families(knob, capsys):
    assert main(["enumerate", *scenario_args(knob), "--families", "StmtDelete", "--list"]) == 0
    out = capsys.readouterr().out
    assert "ParamSet" not in out
    assert 'StmtDelete("prog.py::stmt[2]")' in out


def test_evaluate_prints_report_json(knob, tmp_path, capsys):
    patch = tmp_path / "best.patch"
    patch.write_text('ParamSet("level", "8")\n', encoding="utf-8")
    instances = tmp_path / "inst.txt"
    instances.write_text("10\n20\n", encoding="utf-8")
    out_file = tmp_path / "report.json"
    code = main([
        "evaluate", *scenario_args(knob),
        "--patch", str(patch), "--instances", str(instances), "--out", str(out_file),
    ])
    assert code == 0
    assert '"status": "CLEAN"' in capsys.readouterr().out
    report = FitnessReport.from_dict(json.loads(out_file.read_text(encoding="utf-8")))
    assert report.objectives == (15.0,)


def test_evaluate_defaults_to_test_instances(knob, capsys):
    assert main(["evaluate", *scenario_args(knob), "--repeats", "2"]) == 0
    out = capsys.readouterr().out
    assert "(240)" in out
    assert "CoV" in out


def test_report_subcommand(tmp_path, capsys):
    baseline = FitnessReport(VariantStatus.CLEAN, objectives=(8560025063208.7,))
    variant = FitnessReport(VariantStatus.CLEAN, objectives=(7806500120218.0,))
    (tmp_path / "b.json").write_text(json.dumps(baseline.to_dict()), encoding="utf-8")
    (tmp_path / "v.json").write_text(json.dumps(variant.to_dict()), encoding="utf-8")
    code = main(["report", "--baseline", str(tmp_path / "b.json"), "--variant", str(tmp_path / "v.json")])
    assert code == 0
    assert "-8.80%" in capsys.readouterr().out


def test_search_writes_patch_trace_history_and_logs(knob, tmp_path):
    out = tmp_path / "best.patch"
    trace = tmp_path / "trace.jsonl"
    code = main([
        "search", *scenario_args(knob),
        "--families", "ParamSet", "--budget", "20", "--seed", "3",
        "--out", str(out), "--trace", str(trace),
    ])
    assert code == 0
    assert out.exists()
    assert len(trace.read_text(encoding="utf-8").splitlines()) == 20
    work = knob.directory / "_magpie_work"
    history = [json.loads(line) for line in (work / "history.jsonl").read_text(encoding="utf-8").splitlines()]
    assert history[-1]["seed"] == 3
    assert history[-1]["argv"][:2] == ["magpie", "search"]
    log_files = list((work / "logs").glob("magpie-*.jsonl"))
    assert log_files
    operations = {json.loads(line)["operation"] for line in log_files[0].read_text(encoding="utf-8").splitlines()}
    assert {"evaluate", "search_step", "run"} <= operations


def test_minify_and_combine(knob, tmp_path, capsys):
    first = tmp_path / "a.patch"
    first.write_text('ParamSet("level", "3")\nParamSet("level", "8")\n', encoding="utf-8")
    second = tmp_path / "b.patch"
    second.write_text('ParamSet("level", "5")\n', encoding="utf-8")
    minimized = tmp_path / "min.patch"
    assert main(["minify", *scenario_args(knob), "--patch", str(first), "--out", str(minimized)]) == 0
    assert minimized.read_text(encoding="utf-8") == 'ParamSet("level", "8")\n'
    assert "Edit impacts:" in capsys.readouterr().out
    combined = tmp_path / "comb.patch"
    assert main(["combine", *scenario_args(knob), str(first), str(second), "--out", str(combined)]) == 0
    assert combined.read_text(encoding="utf-8") == 'ParamSet("level", "8")\n'


def test_search_keeps_results_with_a_zero_baseline_objective(knob, tmp_path, capsys):
    scenario = knob.directory / "scenario.cfg"
    text = scenario.read_text(encoding="utf-8").replace("objectives = cost", "objectives = err, cost")
    scenario.write_text(text + "measure.err = output_regex (0)\n", encoding="utf-8")
    best = tmp_path / "best.patch"
    trace = tmp_path / "trace.jsonl"
    code = main([
        "search", *scenario_args(knob), "--budget", "10", "--out", str(best), "--trace", str(trace),
    ])
    assert code == 0
    assert best.exists()
    assert len(trace.read_text(encoding="utf-8").splitlines()) == 10
    assert "Change: n/a, " in capsys.readouterr().out


def test_combine_single_patch_is_a_domain_error(knob, tmp_path, capsys):
    patch = tmp_path / "a.patch"
    patch.write_text('ParamSet("level", "8")\n', encoding="utf-8")
    assert main(["combine", *scenario_args(knob), str(patch)]) == 1
    assert capsys.readouterr().err.startswith("Error:")


def test_campaign_writes_result(knob, tmp_path):
    patch_out = tmp_path / "selected.patch"
    code = main(["campaign", *scenario_args(knob), "--budget", "0", "--k", "2", "--patch-out", str(patch_out)])
    assert code == 0
    result = json.loads((knob.directory / "_magpie_work" / "campaign.json").read_text(encoding="utf-8"))
    assert result["selected_patch"] == ""
    assert result["improvement"] == [0.0]
    assert patch_out.read_text(encoding="utf-8") == ""


def test_impacts_table_and_csv(knob, tmp_path, capsys):
    runs = tmp_path / "runs"
    runs.mkdir()
    (runs / "1.patch").write_text('ParamSet("level", "8")\n', encoding="utf-8")
    (runs / "2.patch").write_text('ParamSet("level", "8")\nParamSet("level", "1")\n', encoding="utf-8")
    csv_path = tmp_path / "impacts.csv"
    code = main(["impacts", *scenario_args(knob), "--patches", str(runs), "--csv", str(csv_path)])
    assert code == 0
    assert capsys.readouterr().out.count('ParamSet("level", "8")') >= 1
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines == ["edit,runs,cost %", '"ParamSet(""level"", ""8"")",2,-87.50']


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_required_option_is_usage_error():
    assert main(["minify", "--scenario", "s.cfg"]) == 2


def test_missing_scenario_is_domain_error(tmp_path, capsys):
    assert main(["enumerate", "--scenario", str(tmp_path / "none.cfg")]) == 1
    assert "Error:" in capsys.readouterr().err


def test_malformed_patch_is_domain_error(knob, tmp_path, capsys):
    patch = tmp_path / "bad.patch"
    patch.write_text("StmtDelete(\n", encoding="utf-8")
    assert main(["evaluate", *scenario_args(knob), "--patch", str(patch)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_unknown_family_is_domain_error(knob, capsys):
    assert main(["enumerate", *scenario_args(knob), "--families", "StmtSwap"]) == 1
    assert "--families" in capsys.readouterr().err


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_parse_families():
    assert parse_families(None) == list(ALL_KINDS)
    assert parse_families("ParamSet,StmtDelete") == [EditKind.PARAM_SET, EditKind.STMT_DELETE]
    with pytest.raises(ConfigError):
        parse_families("ParamSet,Nope")


def test_every_subcommand_is_registered():
    parser = build_parser()
    subparsers = next(a for a in parser._actions if a.dest == "command")
    assert set(subparsers.choices) == {
        "enumerate", "search", "minify", "combine", "campaign", "evaluate", "report", "impacts",
    }
