"""Translate natural-language questions into SPARQL-subset queries.

Pipeline: classify the question (List/Boolean/Count), extract entity and
relation mentions with capitalization compounding and n-gram tiling,
link mentions to KG terms by embedding similarity, generate candidate
triple patterns from entity/relation permutations, keep the ones an ASK
probe validates, rank by token overlap with the question, and emit the
query for the question type. No response is produced when no valid
candidate survives - the KGQA module abstains instead of guessing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from . import namespaces as ns
from .embeddings import EmbeddingProvider, cosine
from .errors import ValidationError
from .ontology import STOPWORDS, content_tokens
from .triplestore import (Graph, Pattern, Query, QueryKind, Term, Var, ask,
                          execute, format_query)


class QuestionType(Enum):
    LIST = "list"
    BOOLEAN = "boolean"
    COUNT = "count"


_COUNT_CUES = ("how many", "number of", "count of")
_BOOLEAN_STARTERS = frozenset(
    "is are was were do does did can could has have had".split())


def classify_question(question: str) -> QuestionType:
    """Count cues win over Boolean starters; everything else is List."""
    if not question.strip():
        raise ValidationError("empty question")
    lowered = question.lower()
    if any(cue in lowered for cue in _COUNT_CUES):
        return QuestionType.COUNT
    first = re.findall(r"[a-z0-9]+", lowered)
    if first and first[0] in _BOOLEAN_STARTERS:
        return QuestionType.BOOLEAN
    return QuestionType.LIST


# ---------------------------------------------------------------------------
# Mention extraction.

class MentionKind(Enum):
    ENTITY = "entity"
    RELATION = "relation"


@dataclass(frozen=True)
class Mention:
    surface: str
    span: tuple[int, int]  # token indices, end exclusive
    kind_hint: MentionKind


# Small stand-in for PoS tagging: common accident-report verbs plus an
# -ed suffix heuristic (length > 5 avoids nouns like "speed").
_VERB_LEXICON = frozenset("""
cause causes caused occur occurs occurred operate operates operated
manufacture manufactures manufactured involve involves involved noted
registered reported landed departed crashed collapsed failed injured
damaged sustained attained maintained certified classified piloted flew
""".split())

_PREPOSITIONS = frozenset("by in on at to of due during from with".split())

_MAX_TILE = 4


def _is_verbish(token: str) -> bool:
    lowered = token.lower()
    return lowered in _VERB_LEXICON or (len(lowered) > 5 and lowered.endswith("ed"))


def _is_cap_entity(token: str) -> bool:
    return token[0].isupper() and token.lower() not in STOPWORDS


def extract_mentions(question: str) -> list[Mention]:
    """Non-overlapping entity/relation mentions from one left-to-right pass.

    Maximal runs of capitalized tokens compound into single entity
    mentions; verbs (with trailing prepositions folded in) become
    relation mentions; remaining non-stopword runs are tiled into entity
    mentions of at most four tokens, maximal tiles shadowing sub-grams.
    """
    tokens = [m.group() for m in re.finditer(r"[A-Za-z0-9]+", question)]
    mentions: list[Mention] = []

    def emit(start: int, end: int, kind: MentionKind):
        mentions.append(Mention(" ".join(tokens[start:end]), (start, end), kind))

    def flush_entity_buffer(buffer_start: int, buffer_end: int):
        # greedy tiling: maximal n-grams up to _MAX_TILE tokens
        pos = buffer_start
        while pos < buffer_end:
            tile_end = min(pos + _MAX_TILE, buffer_end)
            emit(pos, tile_end, MentionKind.ENTITY)
            pos = tile_end

    i = 0
    n = len(tokens)
    buffer_start: Optional[int] = None
    while i < n:
        token = tokens[i]
        if _is_cap_entity(token) and i > 0:
            if buffer_start is not None:
                flush_entity_buffer(buffer_start, i)
                buffer_start = None
            run_end = i
            while run_end < n and _is_cap_entity(tokens[run_end]):
                run_end += 1
            emit(i, run_end, MentionKind.ENTITY)
            i = run_end
            continue
        lowered = token.lower()
        if lowered in STOPWORDS:
            if buffer_start is not None:
                flush_entity_buffer(buffer_start, i)
                buffer_start = None
            i += 1
            continue
        if _is_verbish(token):
            if buffer_start is not None:
                flush_entity_buffer(buffer_start, i)
                buffer_start = None
            rel_end = i + 1
            while rel_end < n and tokens[rel_end].lower() in _PREPOSITIONS:
                rel_end += 1
            emit(i, rel_end, MentionKind.RELATION)
            i = rel_end
            continue
        if buffer_start is None:
            buffer_start = i
        i += 1
    if buffer_start is not None:
        flush_entity_buffer(buffer_start, n)

    if not mentions:
        raise ValidationError("question has no content mentions after stopword removal")
    return mentions


# ---------------------------------------------------------------------------
# Entity/relation linking.

@dataclass(frozen=True)
class LinkCandidate:
    mention: Mention
    kg_term: Term
    label: str
    similarity: float


DEFAULT_LINK_THRESHOLD = 0.6
TOP_K_PER_MENTION = 3


def _relation_pool(kg: Graph) -> list[tuple[Term, str]]:
    seen: set[Term] = set()
    pool: list[tuple[Term, str]] = []
    for triple in kg:
        pred = triple.predicate
        if pred.value == ns.LABEL or pred in seen:
            continue
        seen.add(pred)
        pool.append((pred, ns.relation_words(pred.value)))
    return pool


def _subphrases(words: Sequence[str]) -> list[str]:
    return [
        " ".join(words[i:j])
        for i in range(len(words))
        for j in range(i + 1, len(words) + 1)
    ]


def _relation_similarity(surface: str, rendered: str,
                         provider: EmbeddingProvider) -> float:
    """Best cosine between the mention and any contiguous word span of the
    relation rendering.

    A short verb mention ("caused") against a long relation name
    ("is caused by aircraft issue") scores low under whole-string
    n-gram cosine, so the span max recovers the containment signal.
    """
    target = provider.embed(surface)
    return max(
        (cosine(target, provider.embed(span)) for span in _subphrases(rendered.split())),
        default=0.0,
    )


def link(mentions: Sequence[Mention], kg: Graph, provider: EmbeddingProvider,
         theta: float = DEFAULT_LINK_THRESHOLD,
         top_k: int = TOP_K_PER_MENTION) -> list[LinkCandidate]:
    """Top-k KG terms per mention with similarity >= theta.

    Entity mentions score against entity labels, relation mentions
    against de-camel-cased relation local names; ties break on the IRI.
    """
    labels = kg.labels()
    entity_pool = sorted(
        ((term, label) for term, label in labels.items()),
        key=lambda pair: pair[0].value,
    )
    relation_pool = sorted(_relation_pool(kg), key=lambda pair: pair[0].value)

    out: list[LinkCandidate] = []
    for mention in mentions:
        scored: list[tuple[float, str, LinkCandidate]] = []
        if mention.kind_hint is MentionKind.ENTITY:
            target = provider.embed(mention.surface)
            for term, label in entity_pool:
                sim = cosine(target, provider.embed(label))
                if sim >= theta:
                    scored.append((sim, term.value,
                                   LinkCandidate(mention, term, label, sim)))
        else:
            # two stages: the full surface keeps folded prepositions
            # discriminative ("caused due to" vs "caused by"); when no
            # relation reaches the threshold, retry with the bare verb
            surfaces = [mention.surface]
            verb = mention.surface.split()[0]
            if verb != mention.surface:
                surfaces.append(verb)
            for surface in surfaces:
                for term, rendered in relation_pool:
                    sim = _relation_similarity(surface, rendered, provider)
                    if sim >= theta:
                        scored.append((sim, term.value,
                                       LinkCandidate(mention, term, rendered, sim)))
                if scored:
                    break
        scored.sort(key=lambda item: (-item[0], item[1]))
        out.extend(candidate for _, _, candidate in scored[:top_k])
    return out


# ---------------------------------------------------------------------------
# Candidate triple generation, validation, ranking.

@dataclass
class CandidateTriple:
    patterns: tuple[Pattern, ...]
    verbalization: str
    valid: bool
    rank_score: float = 0.0


_QUERY_VAR = "x"


def _render_term(term, labels: dict[Term, str]) -> Optional[str]:
    if isinstance(term, Var):
        return None
    if term.is_literal:
        return term.value
    return labels.get(term, ns.display_name(term.value))


def _verbalize(patterns: tuple[Pattern, ...], labels: dict[Term, str]) -> str:
    words: list[str] = []
    for s, p, o in patterns:
        for value, is_pred in ((s, False), (p, True), (o, False)):
            if isinstance(value, Var):
                continue
            if is_pred:
                words.append(ns.relation_words(value.value))
            else:
                rendered = _render_term(value, labels)
                if rendered:
                    words.append(rendered)
    return " ".join(words)


def generate_triples(entity_cands: Sequence[LinkCandidate],
                     relation_cands: Sequence[LinkCandidate],
                     kg: Graph) -> list[CandidateTriple]:
    """All entity/relation permutations that an ASK probe validates.

    Shapes: (e, r, ?x), (?x, r, e), ground (e1, r, e2), and - when at
    least two distinct entities and relations linked - two-pattern
    conjunctions {(?x, r1, e1), (?x, r2, e2)} for the multi-hop case.
    """
    if not relation_cands:
        return []
    labels = kg.labels()
    var = Var(_QUERY_VAR)
    entities = []
    for cand in entity_cands:
        if cand.kg_term not in {c.kg_term for c in entities}:
            entities.append(cand)
    relations = []
    for cand in relation_cands:
        if cand.kg_term not in {c.kg_term for c in relations}:
            relations.append(cand)

    pattern_sets: list[tuple[Pattern, ...]] = []
    seen: set[tuple[Pattern, ...]] = set()

    def propose(*patterns: Pattern):
        key = tuple(sorted(patterns, key=repr))
        if key not in seen:
            seen.add(key)
            pattern_sets.append(tuple(patterns))

    for rel in relations:
        for ent in entities:
            propose((ent.kg_term, rel.kg_term, var))
            propose((var, rel.kg_term, ent.kg_term))
        for e1 in entities:
            for e2 in entities:
                if e1.kg_term != e2.kg_term:
                    propose((e1.kg_term, rel.kg_term, e2.kg_term))
    if len(entities) >= 2 and len(relations) >= 2:
        for i, e1 in enumerate(entities):
            for e2 in entities[i + 1:]:
                for r1 in relations:
                    for r2 in relations:
                        if r1.kg_term != r2.kg_term:
                            propose((var, r1.kg_term, e1.kg_term),
                                    (var, r2.kg_term, e2.kg_term))

    out = []
    for patterns in pattern_sets:
        if ask(kg, list(patterns)):
            out.append(CandidateTriple(patterns, _verbalize(patterns, labels), True))
    return out


def _jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def rank_triples(candidates: Sequence[CandidateTriple],
                 question: str) -> list[CandidateTriple]:
    """Sort by token overlap with the question, descending.

    Ties prefer the shorter verbalization, then lexicographic order;
    output is a scored permutation of the input.
    """
    q_tokens = set(content_tokens(question))
    ranked = []
    for cand in candidates:
        score = _jaccard(q_tokens, set(content_tokens(cand.verbalization)))
        ranked.append(CandidateTriple(cand.patterns, cand.verbalization,
                                      cand.valid, rank_score=score))
    ranked.sort(key=lambda c: (-c.rank_score, len(c.verbalization), c.verbalization))
    return ranked


# ---------------------------------------------------------------------------
# Query construction and the full KGQA answerer.

_KIND_FOR_QTYPE = {
    QuestionType.LIST: QueryKind.SELECT_DISTINCT,
    QuestionType.BOOLEAN: QueryKind.ASK,
    QuestionType.COUNT: QueryKind.COUNT,
}


def _has_var(cand: CandidateTriple) -> bool:
    return any(isinstance(t, Var) for p in cand.patterns for t in p)


def _to_query(qtype: QuestionType, cand: CandidateTriple,
              prefixes: dict[str, str]) -> Query:
    kind = _KIND_FOR_QTYPE[qtype]
    var = _QUERY_VAR if kind is not QueryKind.ASK else None
    return Query(kind=kind, patterns=list(cand.patterns), var=var, prefixes=prefixes)


def construct_query(qtype: QuestionType, triples: Sequence[CandidateTriple],
                    prefix_map: dict[str, str]) -> Optional[str]:
    """Emit query text for the top-ranked usable candidate.

    List/Count need a variable-bearing candidate; zero usable triples
    signal abstention (None).
    """
    for cand in triples:
        if qtype is QuestionType.BOOLEAN or _has_var(cand):
            return format_query(_to_query(qtype, cand, prefix_map))
    return None


@dataclass
class KgqaConfig:
    theta_link: float = DEFAULT_LINK_THRESHOLD
    top_k_per_mention: int = TOP_K_PER_MENTION
    prefixes: dict[str, str] = field(default_factory=lambda: dict(ns.DEFAULT_PREFIXES))


@dataclass
class TranslationResult:
    qtype: QuestionType
    query_text: str
    triples_used: list[CandidateTriple]
    answers: list[str]


def _label_of(term: Term, labels: dict[Term, str]) -> str:
    if term.is_literal:
        return term.value
    return labels.get(term, ns.display_name(term.value))


def translate(question: str, kg: Graph, provider: EmbeddingProvider,
              config: KgqaConfig = KgqaConfig()) -> Optional[TranslationResult]:
    """Run the full pipeline; None means the KGQA module abstains."""
    qtype = classify_question(question)
    try:
        mentions = extract_mentions(question)
    except ValidationError:
        return None
    candidates = link(mentions, kg, provider, config.theta_link,
                      config.top_k_per_mention)
    entity_cands = [c for c in candidates if c.mention.kind_hint is MentionKind.ENTITY]
    relation_cands = [c for c in candidates if c.mention.kind_hint is MentionKind.RELATION]
    valid = generate_triples(entity_cands, relation_cands, kg)
    if not valid:
        return None
    ranked = rank_triples(valid, question)
    selected = next(
        (c for c in ranked if qtype is QuestionType.BOOLEAN or _has_var(c)), None)
    if selected is None:
        return None
    query_text = format_query(_to_query(qtype, selected, config.prefixes))

    labels = kg.labels()
    answers: list[str] = []

    def push(answer: str):
        if answer not in answers:
            answers.append(answer)

    if qtype is QuestionType.BOOLEAN:
        result = execute(kg, _to_query(qtype, selected, config.prefixes))
        push("Yes" if result else "No")
    elif qtype is QuestionType.COUNT:
        result = execute(kg, _to_query(qtype, selected, config.prefixes))
        push(str(result))
    else:
        # answers accumulate across candidates in rank order so the
        # fusion stage has up to five KG answers to draw from
        for cand in ranked:
            if not _has_var(cand):
                continue
            for term in execute(kg, _to_query(qtype, cand, config.prefixes)):
                push(_label_of(term, labels))
    return TranslationResult(qtype, query_text, ranked, answers)


def kgqa_answer(question: str, kg: Graph, provider: EmbeddingProvider,
                config: KgqaConfig = KgqaConfig()) -> list[str]:
    """Answer labels in rank-then-derivation order; [] is abstention."""
    result = translate(question, kg, provider, config)
    return result.answers if result else []
