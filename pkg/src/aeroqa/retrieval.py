"""Passage retrieval: BM25 over an inverted index, and dense cosine scan.

Both retrievers tokenize with :func:`aeroqa.ontology.preprocess` so the
lexical statistics line up with the rest of the system.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .embeddings import EmbeddingProvider, cosine
from .errors import ValidationError
from .ingest import Passage
from .ontology import preprocess


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValidationError("BM25 k1 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValidationError("BM25 b must be in [0, 1]")


@dataclass(frozen=True)
class ScoredPassage:
    passage: Passage
    score: float
    rank: int


def doc_text(passage: Passage) -> str:
    """Heading plus body; headings carry section semantics."""
    return " ".join(part for part in (passage.heading, passage.text) if part)


class PassageIndex:
    """Inverted index with the statistics BM25 needs."""

    def __init__(self, passages: Sequence[Passage]):
        self.passages: list[Passage] = list(passages)
        self.doc_tokens: list[list[str]] = [
            preprocess(doc_text(p)) for p in self.passages
        ]
        self.doc_lengths: list[int] = [len(toks) for toks in self.doc_tokens]
        self.N = len(self.passages)
        self.avgdl = (sum(self.doc_lengths) / self.N) if self.N else 0.0
        self.postings: dict[str, list[tuple[int, int]]] = {}
        for doc_id, toks in enumerate(self.doc_tokens):
            for term, tf in sorted(Counter(toks).items()):
                self.postings.setdefault(term, []).append((doc_id, tf))

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, doc_id: int) -> int:
        for d, f in self.postings.get(term, ()):
            if d == doc_id:
                return f
        return 0


def build_index(passages: Sequence[Passage]) -> PassageIndex:
    return PassageIndex(passages)


def idf(index: PassageIndex, term: str) -> float:
    df = index.df(term)
    return math.log((index.N - df + 0.5) / (df + 0.5) + 1.0)


def bm25_score(index: PassageIndex, q_tokens: Sequence[str], passage: Passage,
               params: Bm25Params = Bm25Params()) -> float:
    """BM25 with +1-smoothed IDF; additive over query token occurrences."""
    try:
        doc_id = index.passages.index(passage)
    except ValueError:
        raise ValidationError("passage is not part of this index") from None
    dl = index.doc_lengths[doc_id]
    norm = params.k1 * (1.0 - params.b + params.b * (dl / index.avgdl if index.avgdl else 0.0))
    score = 0.0
    for term in q_tokens:
        tf = index.tf(term, doc_id)
        if tf == 0:
            continue
        score += idf(index, term) * (tf * (params.k1 + 1.0)) / (tf + norm)
    return score


def _ranked(scored: list[tuple[float, int]], passages: Sequence[Passage],
            k: int) -> list[ScoredPassage]:
    # ties keep passage insertion order; sort is stable over (-score)
    ordered = sorted(scored, key=lambda pair: (-pair[0], pair[1]))
    return [
        ScoredPassage(passage=passages[doc_id], score=score, rank=rank)
        for rank, (score, doc_id) in enumerate(ordered[:k], start=1)
    ]


def retrieve_bm25(index: PassageIndex, question: str, k: int,
                  params: Bm25Params = Bm25Params()) -> list[ScoredPassage]:
    """Top-k passages by BM25 score, descending; ties by insertion order."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    q_tokens = preprocess(question)
    scored = [
        (bm25_score(index, q_tokens, p, params), doc_id)
        for doc_id, p in enumerate(index.passages)
    ]
    return _ranked(scored, index.passages, k)


def retrieve_dense(passages: Sequence[Passage], question: str,
                   provider: EmbeddingProvider, k: int) -> list[ScoredPassage]:
    """Top-k passages by cosine of embedded question and `heading + text`."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    q_vec = provider.embed(question)
    scored = []
    for doc_id, p in enumerate(passages):
        p_vec = provider.embed(doc_text(p))
        scored.append((cosine(q_vec, p_vec), doc_id))
    return _ranked(scored, list(passages), k)
