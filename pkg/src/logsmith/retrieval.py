"""BM25 indexing and retrieval over code snippets."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .errors import DuplicateDocId, EmptyCorpus, EmptyIndex

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

INDEX_VERSION = 1

_WORD_RE = re.compile(r"[A-Za-z0-9]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z0-9]*|[a-z0-9]+")


def tokenize_code(text: str) -> list[str]:
    """Lowercased subword tokens: non-alphanumeric boundaries, then camelCase.

    Digits stay attached to a preceding lowercase run ("name2" is one token);
    acronym runs split before a trailing capitalized word ("HTTPServer" ->
    http, server).
    """
    tokens: list[str] = []
    for word in _WORD_RE.findall(text):
        for piece in _CAMEL_RE.findall(word):
            tokens.append(piece.lower())
    return tokens


@dataclass
class RetrievalPair:
    """A (before, after) example: the same method without and with its log."""

    id: str
    code_before: str
    code_after: str
    tokens: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.tokens:
            self.tokens = tokenize_code(self.code_before)

    def to_dict(self) -> dict:
        return {"id": self.id, "code_before": self.code_before,
                "code_after": self.code_after}

    @classmethod
    def from_dict(cls, data: dict) -> "RetrievalPair":
        return cls(id=data["id"], code_before=data["code_before"],
                   code_after=data["code_after"])


class BM25Index:
    """Okapi BM25 inverted index; immutable once built.

    IDF uses the non-negative variant ln((N - df + 0.5)/(df + 0.5) + 1).
    """

    def __init__(self, k1: float = DEFAULT_K1, b: float = DEFAULT_B):
        self.k1 = k1
        self.b = b
        self.postings: dict[str, list[tuple[str, int]]] = {}
        self.doc_lengths: dict[str, int] = {}
        self.doc_count = 0
        self.avg_doc_length = 0.0
        self._payloads: dict[str, Any] = {}

    @classmethod
    def build(cls, docs: Iterable[tuple[str, str, Any]],
              k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> "BM25Index":
        """Index (doc_id, text, payload) triples."""
        index = cls(k1=k1, b=b)
        for doc_id, text, payload in docs:
            if doc_id in index._payloads:
                raise DuplicateDocId(doc_id)
            tokens = tokenize_code(text)
            index._payloads[doc_id] = payload
            index.doc_lengths[doc_id] = len(tokens)
            for term, tf in sorted(Counter(tokens).items()):
                index.postings.setdefault(term, []).append((doc_id, tf))
        index.doc_count = len(index._payloads)
        if index.doc_count == 0:
            raise EmptyCorpus("cannot build an index over zero documents")
        index.avg_doc_length = sum(index.doc_lengths.values()) / index.doc_count
        return index

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log((self.doc_count - df + 0.5) / (df + 0.5) + 1.0)

    def scores(self, query: str) -> dict[str, float]:
        out = {doc_id: 0.0 for doc_id in self.doc_lengths}
        if self.doc_count == 0:
            raise EmptyIndex("index holds no documents")
        avg = self.avg_doc_length or 1.0
        for term, qtf in Counter(tokenize_code(query)).items():
            posting = self.postings.get(term)
            if not posting:
                continue
            idf = self.idf(term)
            for doc_id, tf in posting:
                norm = tf + self.k1 * (1.0 - self.b + self.b * self.doc_lengths[doc_id] / avg)
                out[doc_id] += idf * tf * (self.k1 + 1.0) / norm
        return out

    def retrieve(self, query: str, k: int = 1) -> list[tuple[Any, float]]:
        """Top-k payloads by descending score; ties break on ascending doc id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        scored = self.scores(query)
        ranked = sorted(scored.items(), key=lambda item: (-item[1], item[0]))
        return [(self._payloads[doc_id], score) for doc_id, score in ranked[:k]]


def build_index(pairs: list[RetrievalPair], k1: float = DEFAULT_K1,
                b: float = DEFAULT_B) -> BM25Index:
    """Index example pairs by their unlogged side (queries carry no log yet)."""
    if not pairs:
        raise EmptyCorpus("no pairs to index")
    return BM25Index.build(((p.id, p.code_before, p) for p in pairs), k1=k1, b=b)


def retrieve_similar(index: BM25Index, query: str, k: int = 1
                     ) -> list[tuple[RetrievalPair, float]]:
    return index.retrieve(query, k=k)


class ExampleIndex:
    """Labeled example pool for one-shot prompts (BM25 top-1)."""

    def __init__(self, examples: list[tuple[str, str]],
                 k1: float = DEFAULT_K1, b: float = DEFAULT_B):
        if not examples:
            raise EmptyCorpus("no examples to index")
        # zero-padded ids keep tie-breaking aligned with insertion order
        docs = [(f"ex{i:06d}", code, (code, label))
                for i, (code, label) in enumerate(examples)]
        self._index = BM25Index.build(docs, k1=k1, b=b)

    def top1(self, text: str) -> tuple[str, str]:
        return self._index.retrieve(text, k=1)[0][0]


# ---------------------------------------------------------------------------
# persistence


def save_index(index: BM25Index, path: str | Path) -> None:
    pairs = sorted(index._payloads.values(), key=lambda p: p.id)
    payload = {
        "version": INDEX_VERSION,
        "k1": index.k1,
        "b": index.b,
        "pairs": [p.to_dict() for p in pairs],
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=1),
                          encoding="utf-8")


def load_index(path: str | Path) -> BM25Index:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("version") != INDEX_VERSION:
        raise ValueError(f"unsupported index version {data.get('version')!r}")
    pairs = [RetrievalPair.from_dict(d) for d in data["pairs"]]
    if not pairs:
        raise EmptyIndex(f"{path} holds no documents")
    return build_index(pairs, k1=data.get("k1", DEFAULT_K1), b=data.get("b", DEFAULT_B))


def pairs_from_record(record) -> list[RetrievalPair]:
    """Example pairs from a corpus record: one per contained log statement."""
    from .corpus import make_judger_samples

    pairs = []
    for i, sample in enumerate(make_judger_samples(record)):
        if sample.provenance != "positive_removal":
            continue
        pairs.append(RetrievalPair(
            id=f"{record.id}::pair{i}",
            code_before=sample.target_code,
            code_after=record.source,
        ))
    return pairs
