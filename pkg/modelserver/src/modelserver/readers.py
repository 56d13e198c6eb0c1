"""Reading-comprehension backends.

Extractive readers must return verbatim spans of the source passage;
the service enforces that invariant again before answering. The
abstractive fallback synthesizes its answer from the best-matching
sentences instead of quoting a single span.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Protocol, Sequence

from .config import ECHO, OVERLAP

log = logging.getLogger(__name__)

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")
_TOKEN_RE = re.compile(r"[a-z0-9]+")

_STOP = frozenset("""
a an and are as at be but by did do for from had has have how in is it of
on or that the this to was were what when where which who why with due
""".split())


@dataclass(frozen=True)
class RawAnswer:
    text: str
    passage_index: int
    score: float


class Reader(Protocol):
    def read(self, question: str, passages: Sequence[str],
             top_n: int) -> list[RawAnswer]: ...


def _tokens(text: str) -> set[str]:
    return {t for t in _TOKEN_RE.findall(text.lower()) if t not in _STOP}


def _overlap(a: set[str], b: set[str]) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 0.0


class OverlapReader:
    """Scores each sentence by token overlap and returns it verbatim."""

    def read(self, question: str, passages: Sequence[str],
             top_n: int) -> list[RawAnswer]:
        q_tokens = _tokens(question)
        scored: list[tuple[float, int, int, str]] = []
        for p_idx, passage in enumerate(passages):
            for s_idx, sentence in enumerate(_SENTENCE_RE.split(passage)):
                sentence = sentence.strip()
                if not sentence:
                    continue
                scored.append((_overlap(q_tokens, _tokens(sentence)),
                               p_idx, s_idx, sentence))
        scored.sort(key=lambda row: (-row[0], row[1], row[2]))
        out = []
        for score, p_idx, _, sentence in scored[:top_n]:
            # offsets must be consistent: the span is located, not assumed
            start = passages[p_idx].find(sentence)
            assert start >= 0
            out.append(RawAnswer(sentence, p_idx, score))
        return out


class EchoSummarizer:
    """Abstractive fallback: restates the best sentences in one answer."""

    def __init__(self):
        self._ranker = OverlapReader()

    def read(self, question: str, passages: Sequence[str],
             top_n: int) -> list[RawAnswer]:
        ranked = self._ranker.read(question, passages, top_n=max(top_n, 2))
        if not ranked:
            return [RawAnswer("", 0, 0.0)]
        primary = ranked[0]
        summary = " ".join(dict.fromkeys(a.text for a in ranked[:2]))
        answers = [RawAnswer(summary, primary.passage_index, primary.score)]
        return answers[:top_n] if top_n >= 1 else answers


class TransformersReader:
    """Extractive QA via a local transformers checkpoint."""

    def __init__(self, model_id: str):
        from transformers import pipeline  # lazy, heavy

        self._pipe = pipeline("question-answering", model=model_id)

    def read(self, question: str, passages: Sequence[str],
             top_n: int) -> list[RawAnswer]:
        answers = []
        for p_idx, passage in enumerate(passages):
            result = self._pipe(question=question, context=passage)
            answers.append(RawAnswer(result["answer"], p_idx, float(result["score"])))
        answers.sort(key=lambda a: -a.score)
        return answers[:top_n]


def build_extractive(model_id: str) -> Reader:
    if model_id == OVERLAP:
        return OverlapReader()
    try:
        return TransformersReader(model_id)
    except Exception as exc:  # noqa: BLE001 - startup degradation is deliberate
        log.warning("cannot load extractive model %r (%s); using overlap reader",
                    model_id, exc)
        return OverlapReader()


def build_generative(model_id: str) -> Reader:
    if model_id == ECHO:
        return EchoSummarizer()
    try:
        return TransformersReader(model_id)
    except Exception as exc:  # noqa: BLE001
        log.warning("cannot load generative model %r (%s); using echo summarizer",
                    model_id, exc)
        return EchoSummarizer()
