"""Evaluation metrics for whether/where/what-to-log and the gated protocol."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .analysis.logs import LogLevel
from .analysis.parser import block_map
from .errors import IdMismatch, LineOutOfRange, LogsmithError, UnparseableScore
from .judger import LOG_LABEL


# ---------------------------------------------------------------------------
# whether-to-log


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass
class WhetherMetrics:
    ba: float
    precision: float
    recall: float
    f1: float
    undefined: tuple[str, ...] = ()  # ratios whose denominator was zero

    def to_dict(self) -> dict:
        return {"ba": self.ba, "precision": self.precision, "recall": self.recall,
                "f1": self.f1, "undefined": list(self.undefined)}


def confusion_metrics(c: ConfusionCounts) -> WhetherMetrics:
    """Balanced accuracy is the mean of the two per-class recalls."""
    undefined = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    recall = ratio(c.tp, c.tp + c.fn, "recall")
    specificity = ratio(c.tn, c.tn + c.fp, "specificity")
    precision = ratio(c.tp, c.tp + c.fp, "precision")
    ba = 0.5 * recall + 0.5 * specificity
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return WhetherMetrics(ba=ba, precision=precision, recall=recall, f1=f1,
                          undefined=tuple(undefined))


# ---------------------------------------------------------------------------
# where-to-log


def position_accuracy(pred_line: int, true_line: int,
                      line_blocks: dict[int, int]) -> int:
    """1 iff the lines differ by at most one and share a code block."""
    if pred_line not in line_blocks or true_line not in line_blocks:
        raise LineOutOfRange(
            f"line {pred_line if pred_line not in line_blocks else true_line} "
            f"not covered by the block map")
    same_block = line_blocks[pred_line] == line_blocks[true_line]
    return int(abs(pred_line - true_line) <= 1 and same_block)


# ---------------------------------------------------------------------------
# what-to-log: levels


def level_metrics(preds: list[LogLevel], truths: list[LogLevel]) -> tuple[float, float]:
    """(exact-match accuracy, mean ordinal distance score).

    Per item the distance score is 1 - |pred - actual| / maxdist(actual),
    where maxdist is the farthest scale end from the actual level.
    """
    if len(preds) != len(truths):
        raise ValueError("prediction and truth lists must align")
    if not preds:
        raise ValueError("level metrics need at least one item")
    exact = sum(1 for p, t in zip(preds, truths) if p == t) / len(preds)
    total = 0.0
    for pred, actual in zip(preds, truths):
        distance = abs(int(pred) - int(actual))
        total += 1.0 - distance / LogLevel.max_distance(actual)
    return exact, total / len(preds)


# ---------------------------------------------------------------------------
# what-to-log: variables


def normalize_variables(expressions: list[str]) -> set[str]:
    """Whitespace-stripped expression text with set semantics."""
    return {"".join(expr.split()) for expr in expressions if "".join(expr.split())}


def variable_metrics(pred: set[str], gold: set[str]) -> tuple[int, float, float, float]:
    """(exact, precision, recall, f1); two empty sets count as a perfect match."""
    if not pred and not gold:
        return 1, 1.0, 1.0, 1.0
    overlap = len(pred & gold)
    precision = overlap / len(pred) if pred else 0.0
    recall = overlap / len(gold) if gold else 0.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return int(pred == gold), precision, recall, f1


# ---------------------------------------------------------------------------
# what-to-log: text


def template_tokens(template: str) -> list[str]:
    """Whitespace split after isolating '{}' placeholders as their own tokens."""
    return template.replace("{}", " {} ").split()


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Modified n-gram precision with brevity penalty.

    Zero higher-order precisions get add-one smoothing; a zero unigram
    precision (or an empty candidate) scores 0. Orders beyond the candidate
    length are skipped.
    """
    if not 1 <= max_n <= 4:
        raise ValueError("max_n must be in 1..4")
    cand = template_tokens(candidate)
    ref = template_tokens(reference)
    if not cand:
        return 0.0
    orders = min(max_n, len(cand))
    log_sum = 0.0
    for n in range(1, orders + 1):
        cand_ngrams = _ngram_counts(cand, n)
        ref_ngrams = _ngram_counts(ref, n)
        total = sum(cand_ngrams.values())
        matched = sum(min(count, ref_ngrams[gram])
                      for gram, count in cand_ngrams.items())
        if n == 1:
            if matched == 0:
                return 0.0
            precision = matched / total
        elif matched == 0:
            precision = (matched + 1) / (total + 1)
        else:
            precision = matched / total
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / orders)
    if len(cand) >= len(ref):
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - len(ref) / len(cand))
    return brevity * geo_mean


def rouge(candidate: str, reference: str, variant: str = "ROUGE_L") -> float:
    """ROUGE_1 (unigram F1) or ROUGE_L (LCS F1) over template tokens."""
    if variant not in ("ROUGE_1", "ROUGE_L"):
        raise ValueError(f"unknown variant {variant!r}")
    cand = template_tokens(candidate)
    ref = template_tokens(reference)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    if variant == "ROUGE_1":
        overlap = sum((Counter(cand) & Counter(ref)).values())
        precision = overlap / len(cand)
        recall = overlap / len(ref)
    else:
        lcs = _lcs_length(cand, ref)
        precision = lcs / len(cand)
        recall = lcs / len(ref)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    previous = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        current = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[len(b)]


# ---------------------------------------------------------------------------
# gated end-to-end evaluation


@dataclass
class GoldRecord:
    """Ground truth for one method: label, and for LOG methods the insertion
    line plus the expected statement, all against `code` (the unlogged input)."""

    method_id: str
    label: str  # LOG | NO_LOG
    code: str
    insert_line: int | None = None
    level: LogLevel | None = None
    template: str | None = None
    variables: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "label": self.label,
            "code": self.code,
            "insert_line": self.insert_line,
            "level": self.level.name if self.level is not None else None,
            "template": self.template,
            "variables": list(self.variables),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GoldRecord":
        level = data.get("level")
        return cls(
            method_id=data["method_id"],
            label=data["label"],
            code=data["code"],
            insert_line=data.get("insert_line"),
            level=LogLevel[level] if level else None,
            template=data.get("template"),
            variables=list(data.get("variables") or []),
        )


@dataclass
class WhatMetrics:
    la: float = 0.0
    aod: float = 0.0
    pmr: float = 0.0
    variable_f1: float = 0.0
    bleu_1: float = 0.0
    bleu_4: float = 0.0
    rouge_1: float = 0.0
    rouge_l: float = 0.0

    def to_dict(self) -> dict:
        return {
            "la": self.la, "aod": self.aod, "pmr": self.pmr,
            "variable_f1": self.variable_f1, "bleu_1": self.bleu_1,
            "bleu_4": self.bleu_4, "rouge_1": self.rouge_1, "rouge_l": self.rouge_l,
        }


@dataclass
class MetricReport:
    whether: WhetherMetrics
    pa: float
    what: WhatMetrics
    counts: dict[str, int]
    judge: float | None = None

    def to_dict(self) -> dict:
        return {
            "whether": self.whether.to_dict(),
            "where": {"pa": self.pa},
            "what": self.what.to_dict(),
            "counts": dict(self.counts),
            "judge": self.judge,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate_end_to_end(results: list, gold: list[GoldRecord]) -> MetricReport:
    """Whether over everything, PA over gold-LOG/predicted-LOG, what-metrics
    only where both gates were passed.

    `results` carry PipelineResult fields (decision, located_line,
    generated_statement).
    """
    gold_by_id = {g.method_id: g for g in gold}
    result_ids = [r.method_id for r in results]
    if len(gold_by_id) != len(gold) or len(set(result_ids)) != len(result_ids):
        raise IdMismatch("duplicate method ids")
    if set(result_ids) != set(gold_by_id):
        missing = set(result_ids) ^ set(gold_by_id)
        raise IdMismatch(f"prediction/gold ids differ: {sorted(missing)[:5]}")

    confusion = ConfusionCounts()
    where_items: list[tuple] = []
    for result in results:
        truth = gold_by_id[result.method_id]
        predicted_log = result.decision == LOG_LABEL
        actually_log = truth.label == LOG_LABEL
        if predicted_log and actually_log:
            confusion.tp += 1
            where_items.append((result, truth))
        elif predicted_log and not actually_log:
            confusion.fp += 1
        elif not predicted_log and actually_log:
            confusion.fn += 1
        else:
            confusion.tn += 1

    pa_values: list[int] = []
    what_items: list[tuple] = []
    for result, truth in where_items:
        correct = 0
        if result.located_line is not None and truth.insert_line is not None:
            try:
                correct = position_accuracy(result.located_line, truth.insert_line,
                                            block_map(truth.code))
            except (LineOutOfRange, LogsmithError):
                correct = 0
        pa_values.append(correct)
        if correct:
            what_items.append((result, truth))

    what = WhatMetrics()
    if what_items:
        la_sum = aod_sum = pmr_sum = f1_sum = 0.0
        b1_sum = b4_sum = r1_sum = rl_sum = 0.0
        for result, truth in what_items:
            statement = result.generated_statement
            if statement is not None and truth.level is not None:
                la, aod = level_metrics([statement.level], [truth.level])
                la_sum += la
                aod_sum += aod
            if statement is not None:
                exact, _, _, f1 = variable_metrics(
                    normalize_variables(statement.variables),
                    normalize_variables(truth.variables))
                pmr_sum += exact
                f1_sum += f1
                b1_sum += bleu(statement.template, truth.template or "", 1)
                b4_sum += bleu(statement.template, truth.template or "", 4)
                r1_sum += rouge(statement.template, truth.template or "", "ROUGE_1")
                rl_sum += rouge(statement.template, truth.template or "", "ROUGE_L")
        n = len(what_items)
        what = WhatMetrics(la=la_sum / n, aod=aod_sum / n, pmr=pmr_sum / n,
                           variable_f1=f1_sum / n, bleu_1=b1_sum / n, bleu_4=b4_sum / n,
                           rouge_1=r1_sum / n, rouge_l=rl_sum / n)

    return MetricReport(
        whether=confusion_metrics(confusion),
        pa=sum(pa_values) / len(pa_values) if pa_values else 0.0,
        what=what,
        counts={"whether": len(results), "where": len(where_items),
                "what": len(what_items)},
    )


# ---------------------------------------------------------------------------
# LLM-as-judge averaging


# standalone digits only: "1.2", "2.5", and "v0.3" never count as scores
_SCORE_RE = re.compile(r"(?<![\d.])([0-3])(?!\.?\d)")

JUDGE_PROMPT_TEMPLATE = """{rubric}

Source context:
```java
{context}
```

Generated logging statement:
{generated}

Reference logging statement:
{gold}

Reply with a single integer score from 0 to 3."""


def llm_judge_score(backends: list, context: str, generated: str, gold: str,
                    rubric: str, timeout: float | None = None) -> float:
    """Mean of three judges' integer scores (each 0-3)."""
    if len(backends) != 3:
        raise ValueError("exactly three judge backends are required")
    prompt = JUDGE_PROMPT_TEMPLATE.format(rubric=rubric.strip(), context=context,
                                          generated=generated, gold=gold)
    scores = []
    for backend in backends:
        response = backend.complete(prompt, timeout=timeout)
        matches = _SCORE_RE.findall(response)
        if not matches:
            raise UnparseableScore(f"no 0-3 score in judge response: {response[:80]!r}")
        scores.append(int(matches[-1]))
    return sum(scores) / len(scores)


def render_gold_statement(gold: GoldRecord) -> str:
    level = gold.level.name if gold.level is not None else "INFO"
    args = ", ".join([json.dumps(gold.template or "")] + list(gold.variables))
    return f"log.{level.lower()}({args});"


def judge_batch(results: list, gold: list[GoldRecord], backends: list,
                rubric: str, timeout: float | None = None) -> float | None:
    """Mean LLMJudge-Score over gold-LOG methods the gate let through.

    None when no method is eligible.
    """
    gold_by_id = {g.method_id: g for g in gold}
    totals = []
    for result in results:
        truth = gold_by_id.get(result.method_id)
        if truth is None or truth.label != LOG_LABEL or result.decision != LOG_LABEL:
            continue
        statement = result.generated_statement
        generated = statement.raw if statement is not None else "(none)"
        totals.append(llm_judge_score(backends, truth.code, generated,
                                      render_gold_statement(truth), rubric,
                                      timeout=timeout))
    if not totals:
        return None
    return sum(totals) / len(totals)
