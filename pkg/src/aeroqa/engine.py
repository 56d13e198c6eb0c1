"""Corpus build and the assembled question-answering engine.

`build_artifacts` turns a directory of plain-text reports into the KG
file, both passage files, and graph statistics. `QaEngine` loads those
artifacts and serves fused answers; the CLI and the HTTP service share
it so both surfaces return identical responses.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import namespaces as ns
from .embeddings import (EmbeddingProvider, HashedNgramProvider, RemoteProvider,
                         load_vectors)
from .errors import AeroQaError, RemoteError, ValidationError
from .fusion import FusionPolicy, SystemResponse, ResponseItem, Source, fuse
from .ingest import (ExtractionPattern, Passage, PassageFormat, export_passages,
                     extract_passages, extract_triples, import_passages,
                     load_patterns, parse_report)
from .nl2sparql import KgqaConfig, kgqa_answer
from .ontology import enumerate_paths, load_taxonomy, map_event_keywords
from .reader import ReaderConfig, ReaderMode, Retriever, dlqa_answer
from .retrieval import PassageIndex, build_index
from .triplestore import Graph, KgStats, Term, Triple, parse_ntlines, serialize, stats

log = logging.getLogger(__name__)

KG_FILENAME = "kg.nt"
PASSAGES_JSON = "passages.json"
PASSAGES_JSONL = "passages.jsonl"

MODEL_URL_ENV = "AEROQA_MODEL_URL"

_CLASSIFIED_AS = ns.REL + "classifiedAsEvent"


@dataclass
class BuildResult:
    graph: Graph
    passages: list[Passage]
    stats: KgStats
    errors: list[tuple[str, str]]  # (filename, message)


def _taxonomy_triples(causes: list[str], taxonomy_text: str) -> list[Triple]:
    tree = load_taxonomy(taxonomy_text)
    if not enumerate_paths(tree):
        return []
    out: list[Triple] = []
    for cause in causes:
        mapping = map_event_keywords(cause, tree)
        if mapping.score <= 0.0:
            continue
        leaf_iri = ns.mint(ns.CLASS, mapping.path.leaf)
        cause_iri = ns.mint(ns.INST, cause)
        out.append(Triple(Term.iri(cause_iri), Term.iri(_CLASSIFIED_AS),
                          Term.iri(leaf_iri)))
        out.append(Triple(Term.iri(leaf_iri), Term.iri(ns.LABEL),
                          Term.literal(mapping.path.leaf)))
    return out


def build_artifacts(reports_dir: str | Path, patterns_path: str | Path,
                    taxonomy_path: Optional[str | Path] = None,
                    out_dir: Optional[str | Path] = None) -> BuildResult:
    """Parse every report, extract triples and passages, write artifacts.

    Reports merge in accident-number order so parallel or shuffled
    directory listings cannot change the output; per-file parse failures
    are collected rather than aborting the whole build.
    """
    patterns: list[ExtractionPattern] = load_patterns(
        Path(patterns_path).read_text(encoding="utf-8"))
    records = []
    errors: list[tuple[str, str]] = []
    seen_ids: dict[str, str] = {}
    for path in sorted(Path(reports_dir).glob("*.txt")):
        try:
            record = parse_report(path.read_text(encoding="utf-8"))
        except AeroQaError as exc:
            errors.append((path.name, str(exc)))
            continue
        if record.accident_number in seen_ids:
            errors.append((path.name,
                           f"duplicate accident number {record.accident_number} "
                           f"(already in {seen_ids[record.accident_number]})"))
            continue
        seen_ids[record.accident_number] = path.name
        records.append(record)
    records.sort(key=lambda r: r.accident_number)

    triples: list[Triple] = []
    passages: list[Passage] = []
    causes: list[str] = []
    for record in records:
        triples.extend(extract_triples(record, patterns))
        passages.extend(extract_passages(record))
        causes.extend(f.cause for f in record.findings)
    if taxonomy_path is not None:
        taxonomy_text = Path(taxonomy_path).read_text(encoding="utf-8")
        triples.extend(_taxonomy_triples(causes, taxonomy_text))

    graph = Graph(triples, prefixes=ns.DEFAULT_PREFIXES)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / KG_FILENAME).write_text(serialize(graph), encoding="utf-8")
        (out / PASSAGES_JSON).write_text(
            export_passages(passages, PassageFormat.JSON), encoding="utf-8")
        (out / PASSAGES_JSONL).write_text(
            export_passages(passages, PassageFormat.JSONL), encoding="utf-8")
    return BuildResult(graph, passages, stats(graph), errors)


# ---------------------------------------------------------------------------
# Providers and readers from config strings.

class SafeProvider(EmbeddingProvider):
    """Remote provider that degrades to the hashed one with a warning.

    Responses are memoized per text: linking and ranking embed the same
    short strings many times over, and each miss is a network call.
    """

    def __init__(self, remote: RemoteProvider, fallback: HashedNgramProvider):
        self.remote = remote
        self.fallback = fallback
        self.dim = fallback.dim
        self._cache: dict[str, object] = {}

    def embed(self, text: str):
        hit = self._cache.get(text)
        if hit is None:
            try:
                hit = self.remote.embed(text)
            except RemoteError as exc:
                log.warning("remote embeddings unavailable (%s); using hashed fallback",
                            exc)
                hit = self.fallback.embed(text)
            self._cache[text] = hit
        return hit


def provider_from_spec(spec: str) -> EmbeddingProvider:
    """`hashed` | `file:PATH` | `remote:URL` (URL may come from the env)."""
    if spec == "hashed":
        return HashedNgramProvider()
    if spec.startswith("file:"):
        return load_vectors(spec[len("file:"):])
    if spec.startswith("remote:"):
        url = spec[len("remote:"):] or os.environ.get(MODEL_URL_ENV, "")
        if not url:
            raise ValidationError(
                f"remote provider needs a URL (or set {MODEL_URL_ENV})")
        return SafeProvider(RemoteProvider(url), HashedNgramProvider())
    raise ValidationError(f"unknown provider spec {spec!r}")


def reader_from_spec(spec: str, mode: ReaderMode = ReaderMode.EXTRACTIVE) -> ReaderConfig:
    """`fallback` | `remote:URL`; remote readers keep the local fallback."""
    if spec == "fallback":
        return ReaderConfig(mode=mode, endpoint=None)
    if spec.startswith("remote:"):
        url = spec[len("remote:"):] or os.environ.get(MODEL_URL_ENV, "")
        if not url:
            raise ValidationError(f"remote reader needs a URL (or set {MODEL_URL_ENV})")
        return ReaderConfig(mode=mode, endpoint=url, fallback_on_error=True)
    raise ValidationError(f"unknown reader spec {spec!r}")


# ---------------------------------------------------------------------------
# The assembled engine.

@dataclass
class EngineConfig:
    provider: str = "hashed"
    reader: str = "fallback"
    reader_mode: ReaderMode = ReaderMode.EXTRACTIVE
    retriever: Retriever = Retriever.BM25
    k: int = 5
    tau: float = 0.8
    theta_link: float = 0.6
    policy: FusionPolicy = field(default_factory=FusionPolicy)

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValidationError("tau must be in (0, 1]")


class QaEngine:
    """Immutable after construction; safe to share across request handlers."""

    def __init__(self, graph: Graph, passages: list[Passage], config: EngineConfig):
        self.graph = graph
        self.passages = passages
        self.config = config
        self.provider = provider_from_spec(config.provider)
        self.reader_cfg = reader_from_spec(config.reader, config.reader_mode)
        self.index: PassageIndex = build_index(passages)
        self.kgqa_cfg = KgqaConfig(theta_link=config.theta_link,
                                   prefixes=dict(graph.prefixes or ns.DEFAULT_PREFIXES))

    @classmethod
    def from_data_dir(cls, data_dir: str | Path,
                      config: Optional[EngineConfig] = None) -> "QaEngine":
        data = Path(data_dir)
        kg_path = data / KG_FILENAME
        passages_path = data / PASSAGES_JSON
        if not kg_path.exists() or not passages_path.exists():
            raise ValidationError(
                f"data dir {data} is missing {KG_FILENAME} or {PASSAGES_JSON}; "
                "run `aeroqa build` first")
        graph = parse_ntlines(kg_path.read_text(encoding="utf-8"))
        graph.prefixes.update(ns.DEFAULT_PREFIXES)
        passages = import_passages(passages_path.read_text(encoding="utf-8"),
                                   PassageFormat.JSON)
        return cls(graph, passages, config or EngineConfig())

    def kg_answers(self, question: str) -> list[str]:
        return kgqa_answer(question, self.graph, self.provider, self.kgqa_cfg)

    def dl_answers(self, question: str) -> list[tuple[str, Passage]]:
        return dlqa_answer(question, self.index, self.config.retriever,
                           self.reader_cfg, k=self.config.k,
                           budget=self.config.policy.total_slots,
                           provider=self.provider)

    def answer(self, question: str) -> SystemResponse:
        if not question.strip():
            raise ValidationError("empty question")
        return fuse(self.kg_answers(question), self.dl_answers(question),
                    self.config.policy)

    def kg_only(self, question: str) -> SystemResponse:
        items = [ResponseItem(text=a, source=Source.KG)
                 for a in self.kg_answers(question)[:self.config.policy.total_slots]]
        return SystemResponse(items=items)

    def dl_only(self, question: str) -> SystemResponse:
        items = [
            ResponseItem(text=a, source=Source.DL, passage=p)
            for a, p in self.dl_answers(question)[:self.config.policy.total_slots]
        ]
        return SystemResponse(items=items)


def response_to_dict(question: str, response: SystemResponse) -> dict:
    return {
        "question": question,
        "items": [
            {
                "text": item.text,
                "source": item.source.value,
                "score": round(item.score, 6),
                "passage": (
                    {"heading": item.passage.heading, "text": item.passage.text,
                     "report_id": item.passage.report_id}
                    if item.passage is not None else None
                ),
            }
            for item in response.items
        ],
    }
