"""Taxonomy path mapping and statistical term extraction.

Also home to the corpus tokenizer (lowercase, split on non-alphanumerics,
stopword removal, light suffix lemmatizer) that retrieval and question
ranking reuse so every lexical comparison in the system agrees on what a
token is.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import ParseError, ValidationError

# ~120 common English words; kept small on purpose so that domain terms
# ("left", "control", "gear") survive.
STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because
been before being below between both but by can could did do does doing
down due during each few for from further had has have having he her here
hers him his how i if in into is it its itself just many me more most my
no nor not now of off on once only or other our out over own same she
should so some such than that the their them then there these they this
those through to too under until up very was we were what when where which
while who whom why will with would you your
""".split())

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumerics."""
    return _TOKEN_RE.findall(text.lower())


def lemmatize(token: str) -> str:
    """Light suffix stripping: -ing, -ed, plural -s."""
    if len(token) > 5 and token.endswith("ing"):
        return token[:-3]
    if len(token) > 4 and token.endswith("ed"):
        return token[:-2]
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
        return token[:-1]
    return token


def content_tokens(text: str) -> list[str]:
    """Tokens with stopwords dropped, no lemmatization."""
    return [t for t in tokenize(text) if t not in STOPWORDS]


def preprocess(text: str) -> list[str]:
    """Full corpus preprocessing: tokenize, drop stopwords, lemmatize."""
    return [lemmatize(t) for t in content_tokens(text)]


# ---------------------------------------------------------------------------
# Taxonomy: indentation-encoded tree, one label per line, 2 spaces per level.

INDENT = 2


@dataclass
class TaxonomyNode:
    label: str
    children: list["TaxonomyNode"]

    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class RootToLeafPath:
    labels: tuple[str, ...]

    def rendered(self) -> str:
        return " / ".join(self.labels)

    @property
    def leaf(self) -> str:
        return self.labels[-1]


class MappingMethod(Enum):
    EMBEDDING_DISTANCE = "embedding_distance"
    KEYWORD_MATCH = "keyword_match"


@dataclass(frozen=True)
class MappingResult:
    event: str
    path: RootToLeafPath
    score: float
    method: MappingMethod


def load_taxonomy(text: str) -> TaxonomyNode:
    """Parse an indentation-encoded hierarchy into a tree."""
    root: TaxonomyNode | None = None
    stack: list[TaxonomyNode] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        stripped = raw.lstrip(" ")
        indent = len(raw) - len(stripped)
        if indent % INDENT != 0:
            raise ParseError(f"indentation of {indent} spaces is not a multiple of {INDENT}",
                             lineno)
        depth = indent // INDENT
        node = TaxonomyNode(stripped.rstrip(), [])
        if depth == 0:
            if root is not None:
                raise ParseError(f"second root {node.label!r}; taxonomy must have one root",
                                 lineno)
            root = node
            stack = [node]
            continue
        if root is None:
            raise ParseError("first taxonomy line must be unindented", lineno)
        if depth > len(stack):
            raise ParseError(
                f"depth jumps from {len(stack) - 1} to {depth} at {node.label!r}", lineno)
        stack = stack[:depth]
        stack[-1].children.append(node)
        stack.append(node)
    if root is None:
        raise ParseError("empty taxonomy")
    return root


def enumerate_paths(tree: TaxonomyNode) -> list[RootToLeafPath]:
    """One path per leaf, depth-first order."""
    paths: list[RootToLeafPath] = []

    def walk(node: TaxonomyNode, prefix: tuple[str, ...]):
        here = prefix + (node.label,)
        if node.is_leaf():
            paths.append(RootToLeafPath(here))
            return
        for child in node.children:
            walk(child, here)

    walk(tree, ())
    return paths


def map_event_embedding(event: str, paths: Sequence[RootToLeafPath],
                        provider) -> MappingResult:
    """Pick the path whose rendered text embeds closest to the event.

    Distance is Euclidean; ties break lexicographically on the rendered
    path so the result is independent of input order.
    """
    if not paths:
        raise ValidationError("no taxonomy paths to map against")
    event_vec = provider.embed(event)
    best: tuple[float, str, RootToLeafPath] | None = None
    for path in paths:
        rendered = path.rendered()
        delta = provider.embed(rendered) - event_vec
        dist = float(math.sqrt(float((delta * delta).sum())))
        key = (dist, rendered)
        if best is None or key < (best[0], best[1]):
            best = (dist, rendered, path)
    return MappingResult(event, best[2], best[0], MappingMethod.EMBEDDING_DISTANCE)


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 0.0
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def map_event_keywords(event: str, tree: TaxonomyNode) -> MappingResult:
    """Map an event to the tree node with the best token overlap.

    Scores are Jaccard over raw token sets (lowercased, punctuation
    stripped). An internal-node winner resolves to the path through its
    first-listed max-scoring descendant leaf; remaining ties pick the
    lexicographically smallest rendered path.
    """
    event_tokens = set(tokenize(event))
    if not event_tokens:
        raise ValidationError("event has no tokens to match")

    scored: list[tuple[float, TaxonomyNode, tuple[str, ...]]] = []

    def walk(node: TaxonomyNode, prefix: tuple[str, ...]):
        here = prefix + (node.label,)
        scored.append((_jaccard(event_tokens, set(tokenize(node.label))), node, here))
        for child in node.children:
            walk(child, here)

    walk(tree, ())
    top = max(s for s, _, _ in scored)

    def resolve(node: TaxonomyNode, prefix: tuple[str, ...]) -> RootToLeafPath:
        if node.is_leaf():
            return RootToLeafPath(prefix)
        # first-listed max-scoring descendant leaf, found depth-first
        best_leaf: tuple[float, RootToLeafPath] | None = None
        for leaf_path in enumerate_paths(node):
            score = _jaccard(event_tokens, set(tokenize(leaf_path.leaf)))
            full = RootToLeafPath(prefix[:-1] + leaf_path.labels)
            if best_leaf is None or score > best_leaf[0]:
                best_leaf = (score, full)
        return best_leaf[1]

    candidates = [
        resolve(node, path) for score, node, path in scored if score == top
    ]
    winner = min(candidates, key=lambda p: p.rendered())
    return MappingResult(event, winner, top, MappingMethod.KEYWORD_MATCH)


# ---------------------------------------------------------------------------
# Term extraction.

@dataclass(frozen=True)
class TermScore:
    term: tuple[str, ...]
    score: float
    frequency: int


def tfidf(corpus: Sequence[Sequence[str]]) -> list[TermScore]:
    """Rank unigram terms by max-over-documents tf*idf.

    tf is the raw in-document count, idf = ln(N / df) with natural log,
    so terms present in every document score exactly 0.
    """
    if not corpus:
        raise ValidationError("tfidf needs at least one document")
    n_docs = len(corpus)
    doc_counts = [Counter(doc) for doc in corpus]
    df: Counter[str] = Counter()
    total: Counter[str] = Counter()
    for counts in doc_counts:
        df.update(counts.keys())
        total.update(counts)
    scores: dict[str, float] = {}
    for counts in doc_counts:
        for term, tf in counts.items():
            idf = math.log(n_docs / df[term])
            score = tf * idf
            if score > scores.get(term, -1.0):
                scores[term] = score
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [TermScore((term,), score, total[term]) for term, score in ranked]


def _ngram_counts(corpus: Sequence[Sequence[str]], max_n: int) -> Counter:
    counts: Counter[tuple[str, ...]] = Counter()
    for doc in corpus:
        for n in range(2, max_n + 1):
            for i in range(len(doc) - n + 1):
                counts[tuple(doc[i:i + n])] += 1
    return counts


def _contains(longer: tuple[str, ...], shorter: tuple[str, ...]) -> bool:
    span = len(shorter)
    return any(longer[i:i + span] == shorter for i in range(len(longer) - span + 1))


def cvalue(corpus: Sequence[Sequence[str]], max_n: int = 4) -> list[TermScore]:
    """Multi-word term scores, frequency- and nesting-aware.

    Candidates are n-grams of 2..max_n tokens. For a term ``a`` never
    nested in a longer candidate the score is log2(|a|) * f(a); when
    nested it is log2(|a|) * (f(a) - mean frequency of the longer
    candidates containing it).
    """
    if max_n < 2:
        raise ValidationError("cvalue needs max_n >= 2")
    counts = _ngram_counts(corpus, max_n)
    by_len: dict[int, list[tuple[str, ...]]] = {}
    for gram in counts:
        by_len.setdefault(len(gram), []).append(gram)

    results = []
    for gram, freq in counts.items():
        nesting = [
            counts[longer]
            for length in range(len(gram) + 1, max_n + 1)
            for longer in by_len.get(length, [])
            if _contains(longer, gram)
        ]
        base = math.log2(len(gram))
        if nesting:
            score = base * (freq - sum(nesting) / len(nesting))
        else:
            score = base * freq
        results.append(TermScore(gram, score, freq))
    results.sort(key=lambda ts: (-ts.score, ts.term))
    return results
