"""CLI surface: exit codes, subcommand flows, headless determinism."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from logsmith.analysis import extract_variables
from logsmith.cli import main
from logsmith.corpus import write_records
from logsmith.metrics import GoldRecord, evaluate_end_to_end
from logsmith.orchestrator import PipelineResult
from logsmith.retrieval import save_index

import scenario
from synth import synth_file

runner = CliRunner()


def test_help_exits_zero():
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    assert "build-corpus" in result.output


def test_unknown_subcommand_exits_two():
    assert runner.invoke(main, ["frobnicate"]).exit_code == 2


def test_missing_required_flag_exits_two():
    assert runner.invoke(main, ["evaluate"]).exit_code == 2


def test_unknown_flag_rejected():
    assert runner.invoke(main, ["analyze", "--bogus", "1"]).exit_code == 2


# ---------------------------------------------------------------------------
# corpus flow on generated sources


@pytest.fixture()
def source_tree(tmp_path):
    import random

    rng = random.Random(21)
    src = tmp_path / "src"
    src.mkdir()
    for i in range(10):
        (src / f"F{i}.java").write_text(synth_file(rng, i, loggy=i % 2 == 0),
                                        encoding="utf-8")
    return src


def test_build_corpus_and_split(source_tree, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    split = tmp_path / "split.json"
    args = ["build-corpus", "--source-dir", str(source_tree), "--out", str(corpus),
            "--split-out", str(split), "--ratios", "0.6,0.2,0.2", "--seed", "5"]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    rows = [json.loads(l) for l in corpus.read_text().splitlines()]
    assert rows and all(row["source"].startswith("class A {") for row in rows)
    split_data = json.loads(split.read_text())
    assert set(split_data) == {"seed", "ratios", "train", "valid", "test"}

    # byte-identical rerun
    first = corpus.read_bytes()
    corpus2 = tmp_path / "corpus2.jsonl"
    split2 = tmp_path / "split2.json"
    args2 = ["build-corpus", "--source-dir", str(source_tree), "--out", str(corpus2),
             "--split-out", str(split2), "--ratios", "0.6,0.2,0.2", "--seed", "5"]
    assert runner.invoke(main, args2).exit_code == 0
    assert corpus2.read_bytes() == first
    assert split2.read_bytes() == split.read_bytes()


def test_export_index_flow(source_tree, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    split = tmp_path / "split.json"
    runner.invoke(main, ["build-corpus", "--source-dir", str(source_tree),
                         "--out", str(corpus), "--split-out", str(split),
                         "--ratios", "0.6,0.2,0.2", "--seed", "5"])
    dataset = tmp_path / "instruct.jsonl"
    result = runner.invoke(main, ["export-dataset", "--corpus", str(corpus),
                                  "--split", str(split), "--out", str(dataset)])
    assert result.exit_code == 0, result.output
    rows = [json.loads(l) for l in dataset.read_text().splitlines()]
    assert rows
    assert set(rows[0]) == {"instruction", "example_code", "example_label",
                            "target_code", "label"}

    # export is a pure function of its inputs
    dataset2 = tmp_path / "instruct2.jsonl"
    runner.invoke(main, ["export-dataset", "--corpus", str(corpus),
                         "--split", str(split), "--out", str(dataset2)])
    assert dataset2.read_bytes() == dataset.read_bytes()

    eval_inputs = tmp_path / "eval.jsonl"
    gold = tmp_path / "gold.jsonl"
    result = runner.invoke(main, ["export-dataset", "--corpus", str(corpus),
                                  "--split", str(split), "--out", str(eval_inputs),
                                  "--kind", "eval", "--gold-out", str(gold)])
    assert result.exit_code == 0, result.output
    gold_rows = [json.loads(l) for l in gold.read_text().splitlines()]
    input_rows = [json.loads(l) for l in eval_inputs.read_text().splitlines()]
    assert len(gold_rows) == len(input_rows)
    assert {r["label"] for r in gold_rows} <= {"LOG", "NO_LOG"}

    index = tmp_path / "index.json"
    result = runner.invoke(main, ["index", "--corpus", str(corpus),
                                  "--split", str(split), "--out", str(index)])
    assert result.exit_code == 0, result.output
    assert json.loads(index.read_text())["version"] == 1


def test_export_unknown_partition_is_usage_error(source_tree, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    split = tmp_path / "split.json"
    runner.invoke(main, ["build-corpus", "--source-dir", str(source_tree),
                         "--out", str(corpus), "--split-out", str(split)])
    result = runner.invoke(main, ["export-dataset", "--corpus", str(corpus),
                                  "--split", str(split), "--out", str(tmp_path / "x"),
                                  "--partition", "holdout"])
    assert result.exit_code == 2


def test_eval_kind_requires_gold_out(source_tree, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    split = tmp_path / "split.json"
    runner.invoke(main, ["build-corpus", "--source-dir", str(source_tree),
                         "--out", str(corpus), "--split-out", str(split)])
    result = runner.invoke(main, ["export-dataset", "--corpus", str(corpus),
                                  "--split", str(split), "--out", str(tmp_path / "x"),
                                  "--kind", "eval"])
    assert result.exit_code == 2


def test_analyze_matches_library(tmp_path):
    code_file = tmp_path / "method.java"
    code_file.write_text(scenario.M3, encoding="utf-8")
    result = runner.invoke(main, ["analyze", "--code-file", str(code_file),
                                  "--line", "5", "--tool", "scope"])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output) == extract_variables(scenario.M3, 5).to_dict()

    result = runner.invoke(main, ["analyze", "--code-file", str(code_file),
                                  "--line", "5", "--tool", "placement"])
    assert json.loads(result.output) == {"placement": "LOOP_BODY"}


def test_analyze_controlled_failure_exits_one(tmp_path):
    code_file = tmp_path / "bad.java"
    code_file.write_text("@@@", encoding="utf-8")
    result = runner.invoke(main, ["analyze", "--code-file", str(code_file),
                                  "--line", "1"])
    assert result.exit_code == 1
    # machine-readable error line on stderr


# ---------------------------------------------------------------------------
# scripted run + evaluate


def _write_scenario_inputs(tmp_path) -> dict:
    corpus = tmp_path / "methods.jsonl"
    with corpus.open("w", encoding="utf-8") as sink:
        write_records(scenario.records(), sink)
    index = tmp_path / "index.json"
    save_index(scenario.make_index(), index)
    config = tmp_path / "config.json"
    config.write_text(json.dumps(scenario.scripted_config()), encoding="utf-8")
    gold = tmp_path / "gold.jsonl"
    with gold.open("w", encoding="utf-8") as sink:
        for record in scenario.gold_records():
            sink.write(json.dumps(record.to_dict()) + "\n")
    return {"corpus": corpus, "index": index, "config": config, "gold": gold}


def test_run_scripted_and_evaluate(tmp_path):
    paths = _write_scenario_inputs(tmp_path)
    out = tmp_path / "results.jsonl"
    result = runner.invoke(main, ["run", "--corpus", str(paths["corpus"]),
                                  "--index", str(paths["index"]),
                                  "--config", str(paths["config"]),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "5 methods, 4 gated LOG" in result.output

    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert [r["method_id"] for r in rows] == ["m1", "m2", "m3", "m4", "m5"]
    assert all(r["telemetry"]["wall_time"] == 0.0 for r in rows)  # offline run

    # byte-identical rerun (headless determinism)
    first = out.read_bytes()
    out2 = tmp_path / "results2.jsonl"
    result = runner.invoke(main, ["run", "--corpus", str(paths["corpus"]),
                                  "--index", str(paths["index"]),
                                  "--config", str(paths["config"]),
                                  "--out", str(out2)])
    assert result.exit_code == 0
    assert out2.read_bytes() == first

    report_path = tmp_path / "report.json"
    figures = tmp_path / "figs"
    result = runner.invoke(main, ["evaluate", "--pred", str(out),
                                  "--gold", str(paths["gold"]),
                                  "--out", str(report_path),
                                  "--figures", str(figures)])
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text())

    # module-level recomputation oracle
    results = [PipelineResult.from_dict(json.loads(l))
               for l in out.read_text().splitlines()]
    gold_records = [GoldRecord.from_dict(json.loads(l))
                    for l in paths["gold"].read_text().splitlines()]
    assert report == evaluate_end_to_end(results, gold_records).to_dict()
    assert report["counts"] == {"whether": 5, "where": 4, "what": 4}
    assert report["whether"]["f1"] == 1.0
    assert report["where"]["pa"] == 1.0

    assert (figures / "metrics.csv").exists()
    for name in ("whether.png", "generation.png", "counts.png", "telemetry.png"):
        png = figures / name
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_run_writes_transcripts(tmp_path):
    paths = _write_scenario_inputs(tmp_path)
    transcripts = tmp_path / "transcripts"
    result = runner.invoke(main, ["run", "--corpus", str(paths["corpus"]),
                                  "--index", str(paths["index"]),
                                  "--config", str(paths["config"]),
                                  "--out", str(tmp_path / "r.jsonl"),
                                  "--transcripts", str(transcripts)])
    assert result.exit_code == 0, result.output
    dumps = sorted(p.name for p in transcripts.iterdir())
    assert len(dumps) == 5
    m3 = json.loads((transcripts / "m3.json").read_text())
    assert set(m3) == {"judger", "locator", "generator"}
    assert any(e.get("role") == "observation" for e in m3["locator"])


def test_run_with_judger_pool(tmp_path):
    paths = _write_scenario_inputs(tmp_path)
    pool = tmp_path / "pool.jsonl"
    pool.write_text(
        json.dumps({"code": scenario.M2, "label": "LOG"}) + "\n"
        + json.dumps({"code": scenario.M1, "label": "NO_LOG"}) + "\n",
        encoding="utf-8")
    out = tmp_path / "results.jsonl"
    result = runner.invoke(main, ["run", "--corpus", str(paths["corpus"]),
                                  "--index", str(paths["index"]),
                                  "--config", str(paths["config"]),
                                  "--out", str(out),
                                  "--judger-pool", str(pool)])
    assert result.exit_code == 0, result.output
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(rows) == 5 and all(r["error"] is None for r in rows)


def test_evaluate_with_scripted_judges(tmp_path):
    paths = _write_scenario_inputs(tmp_path)
    out = tmp_path / "results.jsonl"
    runner.invoke(main, ["run", "--corpus", str(paths["corpus"]),
                         "--index", str(paths["index"]),
                         "--config", str(paths["config"]), "--out", str(out)])
    judge_config = tmp_path / "judge.json"
    judge_config.write_text(json.dumps({
        "rubric": "Score placement, level, text, variables together.",
        "backends": [{"kind": "scripted", "responses": ["3"] * 4},
                     {"kind": "scripted", "responses": ["2"] * 4},
                     {"kind": "scripted", "responses": ["3"] * 4}],
    }), encoding="utf-8")
    report_path = tmp_path / "report.json"
    result = runner.invoke(main, ["evaluate", "--pred", str(out),
                                  "--gold", str(paths["gold"]),
                                  "--out", str(report_path),
                                  "--judge-config", str(judge_config)])
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text())
    assert report["judge"] == pytest.approx(8 / 3, abs=1e-9)


def test_run_permanent_failure_exits_one(tmp_path):
    paths = _write_scenario_inputs(tmp_path)
    config = json.loads(paths["config"].read_text())
    config["judger_backend"] = {"kind": "flaky", "failures": None}
    failing_config = tmp_path / "failing.json"
    failing_config.write_text(json.dumps(config), encoding="utf-8")
    out = tmp_path / "failed.jsonl"
    result = runner.invoke(main, ["run", "--corpus", str(paths["corpus"]),
                                  "--index", str(paths["index"]),
                                  "--config", str(failing_config),
                                  "--out", str(out)])
    assert result.exit_code == 1
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert all(r["error"] == "retries_exhausted" for r in rows)
    assert all(r["telemetry"]["retries"] == 2 for r in rows)
