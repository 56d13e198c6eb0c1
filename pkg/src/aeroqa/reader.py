"""Answer extraction from retrieved passages.

A deterministic extractive fallback (sentence-window scoring by token
overlap) keeps the whole system usable offline; a remote client speaks
the /read protocol for learned extractive or abstractive readers and
falls back when the service is unreachable.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import requests

from .errors import RemoteError, ValidationError
from .ingest import Passage
from .ontology import STOPWORDS, preprocess
from .retrieval import PassageIndex, ScoredPassage, retrieve_bm25, retrieve_dense

log = logging.getLogger(__name__)

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")
_WINDOW_SENTENCES = (1, 2)  # sentence-granular window sizes
DEFAULT_PER_PASSAGE = 2


class ReaderMode(Enum):
    EXTRACTIVE = "extractive"
    ABSTRACTIVE = "abstractive"


@dataclass(frozen=True)
class ReaderAnswer:
    text: str
    passage_ref: int
    score: float


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_RE.split(text) if s.strip()]


def _trim_stopwords(span: str) -> str:
    """Drop leading/trailing stopwords; stays a substring of the input."""
    tokens = list(re.finditer(r"[A-Za-z0-9]+", span))
    start, end = 0, len(tokens)
    while start < end and tokens[start].group().lower() in STOPWORDS:
        start += 1
    while end > start and tokens[end - 1].group().lower() in STOPWORDS:
        end -= 1
    if start >= end:
        return span.strip()
    return span[tokens[start].start():tokens[end - 1].end()]


def _jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def read_extractive_fallback(question: str, passages: Sequence[Passage],
                             per_passage: int = DEFAULT_PER_PASSAGE) -> list[ReaderAnswer]:
    """Score 1-2 sentence windows by token overlap with the question.

    Answers are stopword-trimmed windows, so every answer is a contiguous
    substring of its source passage. The global order is score descending,
    then the passage's position in ``passages`` (callers pass passages in
    retrieval order), then window position.
    """
    if not passages:
        raise ValidationError("extractive reader needs at least one passage")
    q_tokens = set(preprocess(question))
    answers: list[tuple[float, int, int, ReaderAnswer]] = []
    for p_idx, passage in enumerate(passages):
        sentences = split_sentences(passage.text)
        windows: list[tuple[int, str]] = []
        for size in _WINDOW_SENTENCES:
            for start in range(0, max(len(sentences) - size + 1, 0)):
                window = " ".join(sentences[start:start + size])
                windows.append((start, window))
        scored = []
        for w_idx, (start, window) in enumerate(windows):
            score = _jaccard(q_tokens, set(preprocess(window)))
            scored.append((score, w_idx, start, window))
        scored.sort(key=lambda item: (-item[0], item[1]))
        for score, w_idx, _, window in scored[:per_passage]:
            span = _trim_stopwords(window)
            if not span:
                continue
            answers.append((score, p_idx, w_idx,
                            ReaderAnswer(text=span, passage_ref=p_idx, score=score)))
    answers.sort(key=lambda item: (-item[0], item[1], item[2]))
    return [answer for _, _, _, answer in answers]


def validate_extractive(answers: list[ReaderAnswer],
                        passages: Sequence[Passage]) -> list[ReaderAnswer]:
    """Demote answers that are not substrings of their passage to score 0."""
    out = []
    for answer in answers:
        if 0 <= answer.passage_ref < len(passages) and \
                answer.text in passages[answer.passage_ref].text:
            out.append(answer)
        else:
            log.warning("extractive answer %r is not a span of passage %d; demoted",
                        answer.text[:60], answer.passage_ref)
            out.append(ReaderAnswer(answer.text, answer.passage_ref, 0.0))
    return out


def read_remote(question: str, passages: Sequence[Passage], mode: ReaderMode,
                endpoint: str, top_n: int = 10,
                timeout: float = 30.0) -> list[ReaderAnswer]:
    """POST /read; extractive responses are substring-validated on receipt."""
    if not passages:
        raise ValidationError("remote reader needs at least one passage")
    url = endpoint.rstrip("/") + "/read"
    body = {
        "question": question,
        "passages": [
            {"heading": p.heading, "text": p.text, "report_id": p.report_id}
            for p in passages
        ],
        "mode": mode.value,
        "top_n": top_n,
    }
    try:
        resp = requests.post(url, json=body, timeout=timeout)
        resp.raise_for_status()
        payload = resp.json()
    except (requests.RequestException, ValueError) as exc:
        raise RemoteError(f"read request to {url} failed: {exc}") from exc
    raw = payload.get("answers")
    if not isinstance(raw, list):
        raise RemoteError("read response has no answers list")
    answers = []
    for row in raw:
        try:
            answers.append(ReaderAnswer(text=str(row["text"]),
                                        passage_ref=int(row["passage_index"]),
                                        score=float(row["score"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise RemoteError(f"malformed read answer {row!r}: {exc}") from exc
    if mode is ReaderMode.EXTRACTIVE:
        answers = validate_extractive(answers, passages)
    return answers


@dataclass
class ReaderConfig:
    mode: ReaderMode = ReaderMode.EXTRACTIVE
    endpoint: Optional[str] = None       # None -> always use the fallback
    fallback_on_error: bool = True
    per_passage: int = DEFAULT_PER_PASSAGE


class Retriever(Enum):
    BM25 = "bm25"
    DENSE = "dense"


def _read(question: str, passages: Sequence[Passage],
          cfg: ReaderConfig) -> list[ReaderAnswer]:
    if cfg.endpoint:
        try:
            return read_remote(question, passages, cfg.mode, cfg.endpoint)
        except RemoteError as exc:
            if not cfg.fallback_on_error:
                raise
            log.warning("remote reader unavailable (%s); using extractive fallback", exc)
    return read_extractive_fallback(question, passages, cfg.per_passage)


def dlqa_answer(question: str, index: PassageIndex, retriever: Retriever,
                reader_cfg: ReaderConfig, k: int = 5, budget: int = 10,
                provider=None) -> list[tuple[str, Passage]]:
    """Retrieve top-k passages, read answers, return (answer, passage) pairs.

    Pairs come back in reader-score order, at most ``budget`` of them.
    """
    if index.N == 0:
        return []
    if retriever is Retriever.DENSE:
        if provider is None:
            raise ValidationError("dense retrieval needs an embedding provider")
        hits: list[ScoredPassage] = retrieve_dense(index.passages, question, provider, k)
    else:
        hits = retrieve_bm25(index, question, k)
    passages = [h.passage for h in hits]
    answers = _read(question, passages, reader_cfg)
    return [(a.text, passages[a.passage_ref]) for a in answers[:budget]
            if 0 <= a.passage_ref < len(passages)]
