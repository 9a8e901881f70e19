"""Corpus construction: method extraction, judger samples, normalization, splits."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import IO, Iterable

from .analysis.logs import LoggingStatement, parse_log_statement
from .analysis.parser import (
    MethodDecl,
    SimpleStmt,
    parse_file,
    parse_method,
    simple_statements_of,
)
from .analysis.printer import print_wrapped
from .errors import EmptyCorpus, IoFailure

logger = logging.getLogger(__name__)

LOG_LABEL = "LOG"
NO_LOG_LABEL = "NO_LOG"


@dataclass
class MethodRecord:
    """One extracted Java method.

    Log statement lines are 1-based within `source`; start/end lines are
    1-based within the origin file.
    """

    id: str
    source: str
    file: str
    start_line: int
    end_line: int
    log_statements: list[LoggingStatement] = field(default_factory=list)

    @property
    def has_log(self) -> bool:
        return bool(self.log_statements)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "file": self.file,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "log_statements": [ls.to_dict() for ls in self.log_statements],
            "has_log": self.has_log,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MethodRecord":
        return cls(
            id=data["id"],
            source=data["source"],
            file=data["file"],
            start_line=int(data["start_line"]),
            end_line=int(data["end_line"]),
            log_statements=[LoggingStatement.from_dict(d)
                            for d in data.get("log_statements", [])],
        )


@dataclass
class JudgerSample:
    target_code: str
    label: str  # LOG | NO_LOG
    provenance: str  # positive_removal | negative_original
    removed_line: int | None
    origin_id: str

    def to_dict(self) -> dict:
        return {
            "target_code": self.target_code,
            "label": self.label,
            "provenance": self.provenance,
            "removed_line": self.removed_line,
            "origin_id": self.origin_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JudgerSample":
        return cls(
            target_code=data["target_code"],
            label=data["label"],
            provenance=data["provenance"],
            removed_line=data.get("removed_line"),
            origin_id=data["origin_id"],
        )


@dataclass
class CorpusSplit:
    train: list[str]
    valid: list[str]
    test: list[str]
    seed: int
    ratios: tuple[float, float, float]

    def partition(self, name: str) -> list[str]:
        return {"train": self.train, "valid": self.valid, "test": self.test}[name]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train": list(self.train),
            "valid": list(self.valid),
            "test": list(self.test),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusSplit":
        return cls(
            train=list(data["train"]),
            valid=list(data["valid"]),
            test=list(data["test"]),
            seed=int(data["seed"]),
            ratios=tuple(data["ratios"]),
        )


# ---------------------------------------------------------------------------
# extraction


def extract_methods(source_text: str, path: str) -> list[MethodRecord]:
    """One record per method declaration, with line spans and detected logs."""
    classes, bare_methods, warnings = parse_file(source_text)
    for message in warnings:
        logger.warning("%s: %s", path, message)
    lines = source_text.splitlines()
    records: list[MethodRecord] = []
    methods: list[MethodDecl] = list(bare_methods)
    stack = list(classes)
    while stack:
        cls = stack.pop(0)
        methods.extend(cls.methods)
        stack.extend(cls.classes)
    methods.sort(key=lambda m: m.start_line)
    for method in methods:
        if method.body is None:
            continue
        snippet = "\n".join(lines[method.start_line - 1 : method.end_line]) + "\n"
        logs = _find_logs(method, lines, offset=method.start_line - 1)
        records.append(MethodRecord(
            id=f"{path}::{method.name}::{method.start_line}",
            source=snippet,
            file=path,
            start_line=method.start_line,
            end_line=method.end_line,
            log_statements=logs,
        ))
    return records


def _find_logs(method: MethodDecl, lines: list[str], offset: int) -> list[LoggingStatement]:
    logs: list[LoggingStatement] = []
    for stmt in simple_statements_of(method):
        if not isinstance(stmt, SimpleStmt) or stmt.kind != "expr":
            continue
        raw = "\n".join(lines[stmt.start_line - 1 : stmt.end_line]).strip()
        parsed = parse_log_statement(raw, line=stmt.start_line - offset)
        if parsed is not None:
            logs.append(parsed)
    return logs


def record_from_source(record_id: str, source: str, path: str) -> MethodRecord:
    """Record for a standalone method source (log statements re-detected)."""
    tree = parse_method(source)
    lines = source.splitlines()
    return MethodRecord(
        id=record_id,
        source=source,
        file=path,
        start_line=1,
        end_line=len(lines),
        log_statements=_find_logs(tree.method, lines, offset=0),
    )


# ---------------------------------------------------------------------------
# judger samples


def make_judger_samples(record: MethodRecord) -> list[JudgerSample]:
    """n positives (each with one log spliced out) plus the original negative."""
    samples: list[JudgerSample] = []
    lines = record.source.splitlines()
    trailing = "\n" if record.source.endswith("\n") else ""
    for log in record.log_statements:
        span = log.raw.count("\n") + 1
        remaining = lines[: log.line - 1] + lines[log.line - 1 + span :]
        samples.append(JudgerSample(
            target_code="\n".join(remaining) + trailing,
            label=LOG_LABEL,
            provenance="positive_removal",
            removed_line=log.line,
            origin_id=record.id,
        ))
    samples.append(JudgerSample(
        target_code=record.source,
        label=NO_LOG_LABEL,
        provenance="negative_original",
        removed_line=None,
        origin_id=record.id,
    ))
    return samples


# ---------------------------------------------------------------------------
# normalization


def normalize_and_wrap(record: MethodRecord) -> MethodRecord:
    """Re-indent under the canonical style and embed in `class A { ... }`.

    Idempotent; line spans and log positions are recomputed against the
    wrapped source.
    """
    tree = parse_method(record.source)
    wrapped = print_wrapped(tree)
    new_tree = parse_method(wrapped)
    lines = wrapped.splitlines()
    logs = _find_logs(new_tree.method, lines, offset=0)
    return MethodRecord(
        id=record.id,
        source=wrapped,
        file=record.file,
        start_line=1,
        end_line=len(lines),
        log_statements=logs,
    )


# ---------------------------------------------------------------------------
# splitting


def split_corpus(records: list[MethodRecord], ratios: tuple[float, float, float],
                 seed: int) -> CorpusSplit:
    """File-grouped, has_log-stratified, seed-deterministic three-way split."""
    if not records:
        raise EmptyCorpus("no records to split")
    if any(r < 0 for r in ratios):
        raise ValueError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")

    by_file: dict[str, list[MethodRecord]] = {}
    for record in records:
        by_file.setdefault(record.file, []).append(record)
    files = sorted(by_file)
    total_methods = len(records)
    global_logged = sum(1 for r in records if r.has_log)
    global_frac = global_logged / total_methods

    rng = random.Random(seed)
    # strata: files bucketed by their own has_log fraction
    strata: dict[float, list[str]] = {}
    for path in files:
        group = by_file[path]
        frac = round(sum(1 for r in group if r.has_log) / len(group), 6)
        strata.setdefault(frac, []).append(path)

    names = ("train", "valid", "test")
    targets = {name: ratios[i] * total_methods for i, name in enumerate(names)}
    assigned: dict[str, str] = {}
    counts = {name: 0 for name in names}
    logged = {name: 0 for name in names}

    def fill(name: str, size: int) -> float:
        if targets[name] <= 0:
            return float("inf")
        return (counts[name] + size) / targets[name]

    for frac in sorted(strata):
        bucket = list(strata[frac])
        rng.shuffle(bucket)
        for path in bucket:
            group = by_file[path]
            size = len(group)
            n_logged = sum(1 for r in group if r.has_log)
            choice = min(names, key=lambda nm: (fill(nm, size), names.index(nm)))
            assigned[path] = choice
            counts[choice] += size
            logged[choice] += n_logged

    _rebalance(by_file, assigned, counts, logged, targets, global_frac)

    split = CorpusSplit(train=[], valid=[], test=[], seed=seed, ratios=tuple(ratios))
    for path in files:
        bucket = split.partition(assigned[path])
        bucket.extend(r.id for r in by_file[path])
    return split


def _rebalance(by_file, assigned, counts, logged, targets, global_frac,
               tolerance: float = 0.01, max_rounds: int = 120) -> None:
    """Best-improvement file swaps (size difference at most one method)
    nudging every split's has_log fraction toward the global fraction."""
    names = [name for name in counts if targets[name] > 0]
    if len(names) < 2:
        return
    sizes = {p: len(group) for p, group in by_file.items()}
    logs = {p: sum(1 for r in group if r.has_log) for p, group in by_file.items()}

    def deviation(count: int, logcount: int) -> float:
        if count == 0:
            return 0.0
        return abs(logcount / count - global_frac)

    for _ in range(max_rounds):
        if max(deviation(counts[n], logged[n]) for n in names) <= tolerance:
            return
        members = {n: sorted(p for p, nm in assigned.items() if nm == n)
                   for n in names}
        current = sum(deviation(counts[n], logged[n]) for n in names)
        best = None
        for i, name_a in enumerate(names):
            for name_b in names[i + 1 :]:
                base = (current
                        - deviation(counts[name_a], logged[name_a])
                        - deviation(counts[name_b], logged[name_b]))
                for path_a in members[name_a]:
                    for path_b in members[name_b]:
                        if abs(sizes[path_a] - sizes[path_b]) > 1:
                            continue
                        d_count = sizes[path_b] - sizes[path_a]
                        d_log = logs[path_b] - logs[path_a]
                        candidate = (base
                                     + deviation(counts[name_a] + d_count,
                                                 logged[name_a] + d_log)
                                     + deviation(counts[name_b] - d_count,
                                                 logged[name_b] - d_log))
                        if best is None or candidate < best[0] - 1e-12:
                            best = (candidate, path_a, path_b, name_a, name_b)
        if best is None or best[0] >= current - 1e-12:
            return
        _, path_a, path_b, name_a, name_b = best
        d_count = sizes[path_b] - sizes[path_a]
        d_log = logs[path_b] - logs[path_a]
        counts[name_a] += d_count
        counts[name_b] -= d_count
        logged[name_a] += d_log
        logged[name_b] -= d_log
        assigned[path_a], assigned[path_b] = name_b, name_a


# ---------------------------------------------------------------------------
# instruction-dataset export


def export_instruction_dataset(samples: Iterable[JudgerSample], retriever,
                               sink: IO[str]) -> int:
    """Write one instruction-format JSON object per line; returns line count.

    `retriever` must expose `top1(text) -> (example_code, example_label)`;
    see retrieval.ExampleIndex.
    """
    from .judger import INSTRUCTION

    count = 0
    for sample in samples:
        example_code, example_label = retriever.top1(sample.target_code)
        row = {
            "instruction": INSTRUCTION,
            "example_code": example_code,
            "example_label": example_label,
            "target_code": sample.target_code,
            "label": sample.label,
        }
        try:
            sink.write(json.dumps(row, ensure_ascii=False) + "\n")
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        count += 1
    return count


# ---------------------------------------------------------------------------
# JSONL helpers


def write_records(records: Iterable[MethodRecord], sink: IO[str]) -> int:
    count = 0
    for record in records:
        sink.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
        count += 1
    return count


def read_records(stream: IO[str]) -> list[MethodRecord]:
    return [MethodRecord.from_dict(json.loads(line))
            for line in stream if line.strip()]
