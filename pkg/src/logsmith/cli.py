"""Command-line entry point wiring the modules into the two-stage workflow."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import retrieval
from .analysis import backward_slice, classify_placement, extract_variables
from .backends import backend_from_config, is_offline_backend
from .errors import LogsmithError
from .judger import LOG_LABEL
from .metrics import GoldRecord, evaluate_end_to_end, judge_batch
from .orchestrator import OrchestratorConfig, PipelineResult, run_pipeline
from .report import write_report_files


def _fail(kind: str, message: str) -> None:
    click.echo(json.dumps({"error": kind, "detail": message}), err=True)
    sys.exit(1)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LogsmithError as exc:
            _fail(type(exc).__name__, str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
def main() -> None:
    """Offline-testable pipeline for automated Java logging statements."""


# ---------------------------------------------------------------------------


@main.command("build-corpus")
@click.option("--source-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--normalize/--no-normalize", default=True,
              help="Re-indent and wrap each method in a generic class.")
@click.option("--split-out", type=click.Path(dir_okay=False),
              help="Also write a train/valid/test split JSON.")
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=17, show_default=True, type=int)
@_guarded
def build_corpus(source_dir, out, normalize, split_out, ratios, seed):
    """Extract methods from .java files into a corpus JSONL."""
    records = []
    for path in sorted(Path(source_dir).rglob("*.java")):
        text = path.read_text(encoding="utf-8")
        for record in corpus_mod.extract_methods(text, str(path.relative_to(source_dir))):
            if normalize:
                record = corpus_mod.normalize_and_wrap(record)
            records.append(record)
    with open(out, "w", encoding="utf-8") as sink:
        count = corpus_mod.write_records(records, sink)
    click.echo(f"wrote {count} method records to {out}")
    if split_out:
        parts = tuple(float(r) for r in ratios.split(","))
        split = corpus_mod.split_corpus(records, parts, seed)
        Path(split_out).write_text(json.dumps(split.to_dict(), indent=1), encoding="utf-8")
        click.echo(f"wrote split ({len(split.train)}/{len(split.valid)}/{len(split.test)}) "
                   f"to {split_out}")


@main.command("export-dataset")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--kind", type=click.Choice(["instruction", "eval"]), default="instruction",
              show_default=True)
@click.option("--partition", default=None,
              help="Source partition (default: train for instruction, test for eval).")
@click.option("--example-partition", default="valid", show_default=True,
              help="Partition supplying the one-shot example pool.")
@click.option("--gold-out", type=click.Path(dir_okay=False),
              help="Gold JSONL for --kind eval.")
@_guarded
def export_dataset(corpus_path, split_path, out, kind, partition, example_partition,
                   gold_out):
    """Export the instruction-format dataset or an end-to-end eval set."""
    records = _read_corpus(corpus_path)
    split = _read_split(split_path)
    partition = partition or ("train" if kind == "instruction" else "test")
    selected = _partition_records(records, split, partition)

    if kind == "instruction":
        pool = []
        for record in _partition_records(records, split, example_partition):
            for sample in corpus_mod.make_judger_samples(record):
                pool.append((sample.target_code, sample.label))
        retriever = retrieval.ExampleIndex(pool)
        samples = [s for record in selected
                   for s in corpus_mod.make_judger_samples(record)]
        with open(out, "w", encoding="utf-8") as sink:
            count = corpus_mod.export_instruction_dataset(samples, retriever, sink)
        click.echo(f"wrote {count} instruction rows to {out}")
        return

    if not gold_out:
        raise click.UsageError("--kind eval requires --gold-out")
    inputs, gold = [], []
    for record in selected:
        samples = corpus_mod.make_judger_samples(record)
        positives = [s for s in samples if s.provenance == "positive_removal"]
        for log, sample in zip(record.log_statements, positives):
            sample_id = f"{record.id}::pos{log.line}"
            inputs.append(corpus_mod.record_from_source(sample_id, sample.target_code,
                                                        record.file))
            gold.append(GoldRecord(method_id=sample_id, label=LOG_LABEL,
                                   code=sample.target_code, insert_line=log.line,
                                   level=log.level, template=log.template,
                                   variables=list(log.variables)))
        sample_id = f"{record.id}::neg"
        inputs.append(corpus_mod.record_from_source(sample_id, record.source, record.file))
        gold.append(GoldRecord(method_id=sample_id, label="NO_LOG", code=record.source))
    with open(out, "w", encoding="utf-8") as sink:
        corpus_mod.write_records(inputs, sink)
    with open(gold_out, "w", encoding="utf-8") as sink:
        for row in gold:
            sink.write(json.dumps(row.to_dict(), ensure_ascii=False) + "\n")
    click.echo(f"wrote {len(inputs)} eval inputs to {out} and gold to {gold_out}")


@main.command("index")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--split", "split_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--partition", default="train", show_default=True)
@click.option("--k1", default=retrieval.DEFAULT_K1, show_default=True, type=float)
@click.option("--b", default=retrieval.DEFAULT_B, show_default=True, type=float)
@_guarded
def index_cmd(corpus_path, out, split_path, partition, k1, b):
    """Build the (code_before, code_after) BM25 index from a corpus."""
    records = _read_corpus(corpus_path)
    if split_path:
        records = _partition_records(records, _read_split(split_path), partition)
    pairs = [pair for record in records for pair in retrieval.pairs_from_record(record)]
    index = retrieval.build_index(pairs, k1=k1, b=b)
    retrieval.save_index(index, out)
    click.echo(f"indexed {index.doc_count} example pairs into {out}")


@main.command("analyze")
@click.option("--code-file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--line", required=True, type=int)
@click.option("--tool", type=click.Choice(["scope", "slice", "placement"]),
              default="slice", show_default=True)
@_guarded
def analyze(code_file, line, tool):
    """Run one analysis tool on a method file and print the JSON report."""
    source = Path(code_file).read_text(encoding="utf-8")
    if tool == "scope":
        click.echo(extract_variables(source, line).to_json())
    elif tool == "slice":
        click.echo(backward_slice(source, line).to_json())
    else:
        click.echo(json.dumps({"placement": classify_placement(source, line).value}))


@main.command("run")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
              envvar="LOGSMITH_CONFIG")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--judger-pool", type=click.Path(exists=True, dir_okay=False),
              help="Labeled example JSONL ({code,label}) for the judger one-shot.")
@click.option("--transcripts", type=click.Path(file_okay=False),
              help="Directory for per-method transcript dumps.")
@_guarded
def run(corpus_path, index_path, config_path, out, judger_pool, transcripts):
    """Run the gate + agent pipeline over every corpus record."""
    records = _read_corpus(corpus_path)
    index = retrieval.load_index(index_path)
    raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
    config = OrchestratorConfig.from_dict(raw)
    judger_backend = backend_from_config(raw.get("judger_backend", {}))
    agent_backend = backend_from_config(raw.get("agent_backend", {}))
    offline = (is_offline_backend(raw.get("judger_backend", {}))
               and is_offline_backend(raw.get("agent_backend", {})))
    examples = None
    if judger_pool:
        rows = [json.loads(line) for line in
                Path(judger_pool).read_text(encoding="utf-8").splitlines() if line.strip()]
        examples = retrieval.ExampleIndex([(r["code"], r["label"]) for r in rows])

    results: list[PipelineResult] = []
    failures = 0
    with open(out, "w", encoding="utf-8") as sink:
        for record in records:
            result = run_pipeline(record, index, judger_backend, agent_backend,
                                  config, judger_examples=examples)
            # scripted runs report no wall time so reruns stay byte-identical
            sink.write(json.dumps(result.to_dict(zero_wall_time=offline),
                                  ensure_ascii=False) + "\n")
            if result.error:
                failures += 1
            if transcripts:
                tdir = Path(transcripts)
                tdir.mkdir(parents=True, exist_ok=True)
                safe = record.id.replace("/", "_").replace(":", "_")
                (tdir / f"{safe}.json").write_text(
                    json.dumps(result.transcripts, indent=1), encoding="utf-8")
            results.append(result)

    total = len(results)
    logged = sum(1 for r in results if r.decision == LOG_LABEL)
    calls = sum(r.telemetry.tool_calls for r in results)
    failed_calls = sum(r.telemetry.tool_failures for r in results)
    click.echo(f"{total} methods, {logged} gated LOG, {failures} controlled failures")
    if total:
        rate = (100.0 * failed_calls / calls) if calls else 0.0
        click.echo(f"tool calls: {calls} total, {calls / total:.2f} per method, "
                   f"{rate:.2f}% failed")
    if failures:
        sys.exit(1)


@main.command("evaluate")
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gold", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--figures", type=click.Path(file_okay=False),
              help="Directory for metrics.csv and the rendered PNG charts.")
@click.option("--judge-config", type=click.Path(exists=True, dir_okay=False),
              help="JSON with a rubric and three judge backends for the "
                   "optional LLMJudge-Score average.")
@_guarded
def evaluate(pred, gold, out, figures, judge_config):
    """Score predictions against gold and write the metric report JSON."""
    results = [PipelineResult.from_dict(json.loads(line))
               for line in Path(pred).read_text(encoding="utf-8").splitlines()
               if line.strip()]
    gold_records = [GoldRecord.from_dict(json.loads(line))
                    for line in Path(gold).read_text(encoding="utf-8").splitlines()
                    if line.strip()]
    report = evaluate_end_to_end(results, gold_records)
    if judge_config:
        judge = json.loads(Path(judge_config).read_text(encoding="utf-8"))
        rubric = judge.get("rubric", "")
        if "rubric_file" in judge:
            rubric = Path(judge["rubric_file"]).read_text(encoding="utf-8")
        backends = [backend_from_config(cfg) for cfg in judge["backends"]]
        report.judge = judge_batch(results, gold_records, backends, rubric)
    Path(out).write_text(report.to_json() + "\n", encoding="utf-8")
    click.echo(f"wrote metric report to {out}")
    if figures:
        telemetry = None
        if results:
            total = len(results)
            calls = sum(r.telemetry.tool_calls for r in results)
            telemetry = {
                "tool_calls_per_method": calls / total,
                "tool_failure_rate": (sum(r.telemetry.tool_failures for r in results) / calls
                                      if calls else 0.0),
                "retries_per_method": sum(r.telemetry.retries for r in results) / total,
            }
        written = write_report_files(report, figures, telemetry)
        click.echo("wrote " + ", ".join(str(p) for p in written))


# ---------------------------------------------------------------------------


def _read_corpus(path: str) -> list:
    with open(path, "r", encoding="utf-8") as stream:
        return corpus_mod.read_records(stream)


def _read_split(path: str) -> corpus_mod.CorpusSplit:
    return corpus_mod.CorpusSplit.from_dict(
        json.loads(Path(path).read_text(encoding="utf-8")))


def _partition_records(records, split, partition: str) -> list:
    try:
        wanted = set(split.partition(partition))
    except KeyError:
        raise click.UsageError(f"unknown partition {partition!r}")
    return [r for r in records if r.id in wanted]


if __name__ == "__main__":
    main()
