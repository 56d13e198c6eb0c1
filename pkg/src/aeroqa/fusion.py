"""Merge KG and DL answer streams and score systems with four metrics.

The fused response holds at most ten slots: up to five knowledge-graph
answers first, the rest filled by retriever-reader answers, with the DL
side absorbing any KG shortfall. Metrics: exact match (first answer,
byte equality after trimming), exact recall (capped at ten gold), and
thresholded-cosine semantic accuracy/recall over answers and passages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

from .embeddings import EmbeddingProvider, cosine
from .errors import ValidationError
from .ingest import Passage


class Source(Enum):
    KG = "kg"
    DL = "dl"


@dataclass(frozen=True)
class ResponseItem:
    text: str
    source: Source
    passage: Optional[Passage] = None
    score: float = 0.0

    def passage_text(self) -> str:
        """KG answers stand in for their own passage."""
        if self.passage is not None:
            return self.passage.text
        return self.text


@dataclass
class SystemResponse:
    items: list[ResponseItem] = field(default_factory=list)

    def answer_texts(self) -> list[str]:
        return [item.text for item in self.items]

    def passage_texts(self) -> list[str]:
        return [item.passage_text() for item in self.items]


@dataclass(frozen=True)
class FusionPolicy:
    total_slots: int = 10
    per_module_quota: int = 5
    dedupe: bool = True

    def __post_init__(self):
        if self.per_module_quota > self.total_slots:
            raise ValidationError("per-module quota cannot exceed total slots")


def fuse(kg: Sequence[str], dl: Sequence[tuple[str, Passage]],
         policy: FusionPolicy = FusionPolicy()) -> SystemResponse:
    """Apply the quota policy: KG answers first, DL fills the shortfall.

    With dedupe on, case-folded duplicates are dropped and filling
    continues from the same stream; with it off the output is exactly
    the quota arithmetic.
    """
    items: list[ResponseItem] = []
    taken: set[str] = set()

    def accept(text: str) -> bool:
        if not policy.dedupe:
            return True
        key = text.strip().casefold()
        if key in taken:
            return False
        taken.add(key)
        return True

    kg_budget = policy.per_module_quota
    for answer in kg:
        if len(items) >= kg_budget:
            break
        if accept(answer):
            items.append(ResponseItem(text=answer, source=Source.KG))
    for answer, passage in dl:
        if len(items) >= policy.total_slots:
            break
        if accept(answer):
            items.append(ResponseItem(text=answer, source=Source.DL,
                                      passage=passage))
    return SystemResponse(items=items)


# ---------------------------------------------------------------------------
# Metrics.

_TOP_N = 10


def exact_match(preds: Sequence[str], gold: Sequence[str]) -> int:
    """1 iff the first prediction equals some gold answer byte-for-byte
    (after trimming outer whitespace)."""
    if not gold:
        raise ValidationError("exact_match needs a non-empty gold list")
    if not preds:
        return 0
    first = preds[0].strip()
    return int(any(first == g.strip() for g in gold))


def _gold_set(gold: Sequence[str]) -> set[str]:
    return {g.strip() for g in gold}


def exact_recall(preds: Sequence[str], gold: Sequence[str]) -> float:
    """Fraction of distinct gold answers found exactly in the predictions,
    with the denominator capped at ten (the system only predicts ten)."""
    if not gold:
        raise ValidationError("exact_recall needs a non-empty gold list")
    gold_distinct = _gold_set(gold)
    pred_set = {p.strip() for p in preds}
    matched = sum(1 for g in gold_distinct if g in pred_set)
    return matched / min(len(gold_distinct), _TOP_N)


def semantic_accuracy(preds: Sequence[str], gold: Sequence[str],
                      provider: EmbeddingProvider, tau: float) -> int:
    """1 iff any prediction/gold pair embeds within cosine >= tau.

    Rank-insensitive by design, unlike exact match.
    """
    if not 0.0 < tau <= 1.0:
        raise ValidationError("tau must be in (0, 1]")
    if not preds or not gold:
        return 0
    gold_vecs = [provider.embed(g.strip()) for g in _gold_set(gold)]
    for p in preds:
        p_vec = provider.embed(p.strip())
        if any(cosine(p_vec, g_vec) >= tau for g_vec in gold_vecs):
            return 1
    return 0


def semantic_recall(preds: Sequence[str], gold: Sequence[str],
                    provider: EmbeddingProvider, tau: float) -> float:
    """Fraction of distinct gold answers within cosine >= tau of some
    prediction; denominator capped at ten."""
    if not 0.0 < tau <= 1.0:
        raise ValidationError("tau must be in (0, 1]")
    if not gold:
        raise ValidationError("semantic_recall needs a non-empty gold list")
    gold_distinct = sorted(_gold_set(gold))
    if not preds:
        return 0.0
    pred_vecs = [provider.embed(p.strip()) for p in preds]
    matched = 0
    for g in gold_distinct:
        g_vec = provider.embed(g)
        if any(cosine(p_vec, g_vec) >= tau for p_vec in pred_vecs):
            matched += 1
    return matched / min(len(gold_distinct), _TOP_N)


def accuracy_ratio(correct: int, total: int) -> float:
    if total <= 0:
        raise ValidationError("accuracy ratio needs a positive total")
    if not 0 <= correct <= total:
        raise ValidationError("correct must lie in [0, total]")
    return correct / total


# ---------------------------------------------------------------------------
# Test-set evaluation.

@dataclass(frozen=True)
class GoldPassage:
    text: str
    accident_number: str


@dataclass
class TestInstance:
    __test__ = False  # not a pytest class, despite the name

    query: str
    answers: list[str]
    passages: list[GoldPassage] = field(default_factory=list)

    def __post_init__(self):
        if not self.answers:
            raise ValidationError(f"test instance {self.query!r} has no gold answers")
        for p in self.passages:
            if not p.accident_number:
                raise ValidationError(
                    f"test instance {self.query!r} has a passage without accident number")


def load_testset(text: str) -> list[TestInstance]:
    rows = json.loads(text)
    if not isinstance(rows, list) or not rows:
        raise ValidationError("test set must be a non-empty JSON array")
    out = []
    for idx, row in enumerate(rows):
        try:
            passages = [GoldPassage(p["text"], p["accident_number"])
                        for p in row.get("passages", [])]
            out.append(TestInstance(row["query"], list(row["answers"]), passages))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"test instance {idx} is malformed: {exc}") from exc
    return out


METRIC_NAMES = (
    "exact_match",
    "exact_recall",
    "semantic_accuracy_answers",
    "semantic_recall_answers",
    "semantic_accuracy_passages",
    "semantic_recall_passages",
)


@dataclass
class InstanceScore:
    query: str
    values: dict[str, float]
    abstained: bool = False
    failed: bool = False


@dataclass
class EvalReport:
    instances: list[InstanceScore]
    means: dict[str, float]
    abstentions: int
    failures: int

    def as_dict(self) -> dict:
        return {
            "means": self.means,
            "abstentions": self.abstentions,
            "failures": self.failures,
            "instances": [
                {"query": s.query, "abstained": s.abstained, "failed": s.failed,
                 **{k: round(v, 6) for k, v in s.values.items()}}
                for s in self.instances
            ],
        }


@dataclass
class EvalConfig:
    provider: EmbeddingProvider
    tau: float = 0.8


def _zero_scores() -> dict[str, float]:
    return {name: 0.0 for name in METRIC_NAMES}


def evaluate(system: Callable[[str], SystemResponse],
             testset: Sequence[TestInstance], config: EvalConfig) -> EvalReport:
    """Run the system on every instance and average the four metrics.

    Answer metrics score fused answer texts; passage metrics score fused
    passage texts against the gold passages (KG items contribute their
    answer text as passage). A system crash on one instance records an
    all-zero, flagged row instead of aborting the run.
    """
    if not testset:
        raise ValidationError("test set is empty")
    scores: list[InstanceScore] = []
    for instance in testset:
        try:
            response = system(instance.query)
        except Exception:  # noqa: BLE001 - recorded and flagged, not fatal
            scores.append(InstanceScore(instance.query, _zero_scores(),
                                        abstained=False, failed=True))
            continue
        preds = response.answer_texts()[:_TOP_N]
        pred_passages = response.passage_texts()[:_TOP_N]
        gold_passages = [p.text for p in instance.passages]
        values = {
            "exact_match": float(exact_match(preds, instance.answers)),
            "exact_recall": exact_recall(preds, instance.answers),
            "semantic_accuracy_answers": float(
                semantic_accuracy(preds, instance.answers, config.provider, config.tau)),
            "semantic_recall_answers": semantic_recall(
                preds, instance.answers, config.provider, config.tau),
        }
        if gold_passages:
            values["semantic_accuracy_passages"] = float(semantic_accuracy(
                pred_passages, gold_passages, config.provider, config.tau))
            values["semantic_recall_passages"] = semantic_recall(
                pred_passages, gold_passages, config.provider, config.tau)
        else:
            values["semantic_accuracy_passages"] = 0.0
            values["semantic_recall_passages"] = 0.0
        scores.append(InstanceScore(instance.query, values,
                                    abstained=not response.items))
    means = {
        name: sum(s.values[name] for s in scores) / len(scores)
        for name in METRIC_NAMES
    }
    return EvalReport(
        instances=scores,
        means=means,
        abstentions=sum(1 for s in scores if s.abstained),
        failures=sum(1 for s in scores if s.failed),
    )


def format_report_table(reports: dict[str, EvalReport]) -> str:
    """Aligned model-by-metric table over the report means."""
    headers = ["model"] + list(METRIC_NAMES)
    rows = [
        [name] + [f"{report.means[m]:.3f}" for m in METRIC_NAMES]
        for name, report in reports.items()
    ]
    widths = [max(len(str(r[i])) for r in [headers] + rows) for i in range(len(headers))]
    lines = []
    for row in [headers] + rows:
        lines.append("  ".join(str(cell).ljust(width) for cell, width in zip(row, widths)))
    return "\n".join(lines)
