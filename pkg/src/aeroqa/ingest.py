"""Plain-text accident report parsing, triple extraction, and passages.

Report format (desk-scale stand-in for the original PDFs):

    Accident Number: ERA02LA101
    Date: 2002-03-14
    ...more `Key: Value` header lines...

    FINDINGS
    Aircraft Issue: Directional control - Not attained

    == Analysis ==
    Narrative paragraph.

    Another paragraph.

Findings rows split on the first " - "; later hyphens belong to the
reason. Triple extraction is driven by a declarative pattern file so new
report layouts need configuration, not code.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigError, ParseError, ValidationError
from . import namespaces as ns
from .triplestore import Term, Triple

_SECTION_RE = re.compile(r"^==\s*(?P<heading>.+?)\s*==$")
_HEADER_RE = re.compile(r"^(?P<key>[^:]+):\s*(?P<value>.*)$")


@dataclass
class Finding:
    category: str
    cause: str
    reason: str

    def rendered(self) -> str:
        row = f"{self.category}: {self.cause}"
        if self.reason:
            row += f" - {self.reason}"
        return row


@dataclass
class ReportRecord:
    accident_number: str
    fields: dict[str, str] = field(default_factory=dict)
    findings: list[Finding] = field(default_factory=list)
    narrative: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class Passage:
    heading: str
    text: str
    report_id: str


def parse_report(text: str) -> ReportRecord:
    """Parse one report; raises :class:`ParseError` on malformed input."""
    fields: dict[str, str] = {}
    findings: list[Finding] = []
    narrative: list[tuple[str, str]] = []

    mode = "header"
    heading = ""
    paragraph: list[str] = []

    def flush_paragraph():
        nonlocal paragraph
        if paragraph:
            narrative.append((heading, " ".join(paragraph)))
            paragraph = []

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        section = _SECTION_RE.match(line.strip())
        if section:
            flush_paragraph()
            heading = section.group("heading")
            mode = "narrative"
            continue
        if mode != "narrative" and line.strip() == "FINDINGS":
            mode = "findings"
            continue
        if not line.strip():
            if mode == "narrative":
                flush_paragraph()
            continue
        if mode == "header":
            m = _HEADER_RE.match(line)
            if not m or not m.group("key").strip():
                raise ParseError(f"expected `Key: Value` header line, got {line!r}", lineno)
            fields[m.group("key").strip()] = m.group("value").strip()
        elif mode == "findings":
            m = _HEADER_RE.match(line)
            if not m or not m.group("key").strip():
                raise ParseError(f"expected `Category: Cause - Reason` row, got {line!r}",
                                 lineno)
            category = m.group("key").strip()
            cause, sep, reason = m.group("value").partition(" - ")
            cause = cause.strip()
            if not cause:
                raise ParseError(f"findings row has empty cause: {line!r}", lineno)
            findings.append(Finding(category, cause, reason.strip() if sep else ""))
        else:
            paragraph.append(line.strip())
    flush_paragraph()

    accident_number = fields.get("Accident Number", "")
    if not accident_number:
        raise ParseError("report is missing the `Accident Number` header")
    return ReportRecord(accident_number, fields, findings, narrative)


# ---------------------------------------------------------------------------
# Pattern-driven triple extraction.
#
# Selectors: `finding` applies the regex to each rendered findings row,
# `field:<Key>` to that header value. Templates expand `{group}` names
# (plus `{accident_number}`) and carry a namespace tag:
#   acc:{...}   accident individual        inst:{...}  minted instance
#   class:Name  ontology class             rel:Name    object property
#   data:Name   data property              str:{...}   literal
# IRI-tagged templates mint label triples for their original text.

_NAMESPACE_TAGS = {
    "acc": ns.ACC,
    "inst": ns.INST,
    "class": ns.CLASS,
    "rel": ns.REL,
    "data": ns.DATA,
}


@dataclass
class ExtractionPattern:
    selector: str
    regex: re.Pattern
    subject: str
    predicate: str
    object: str

    @staticmethod
    def from_dict(raw: dict) -> "ExtractionPattern":
        try:
            compiled = re.compile(raw["regex"])
        except re.error as exc:
            raise ConfigError(f"pattern regex does not compile: {exc}") from exc
        except KeyError as exc:
            raise ConfigError(f"pattern is missing key {exc}") from exc
        for key in ("selector", "subject", "predicate", "object"):
            if key not in raw:
                raise ConfigError(f"pattern is missing key {key!r}")
        return ExtractionPattern(raw["selector"], compiled, raw["subject"],
                                 raw["predicate"], raw["object"])


def load_patterns(text: str) -> list[ExtractionPattern]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"pattern file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ConfigError("pattern file must be a JSON array")
    return [ExtractionPattern.from_dict(entry) for entry in raw]


def _expand(template: str, groups: dict[str, str]) -> str:
    try:
        return template.format(**groups)
    except KeyError as exc:
        raise ConfigError(f"template {template!r} references unknown group {exc}") from exc
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"template {template!r} is malformed: {exc}") from exc


def _resolve(template: str, groups: dict[str, str],
             labels_out: list[Triple]) -> Term:
    tag, sep, rest = template.partition(":")
    if not sep or tag not in _NAMESPACE_TAGS and tag != "str":
        raise ConfigError(f"template {template!r} needs a namespace tag "
                          f"(one of {sorted(_NAMESPACE_TAGS)} or str)")
    text = _expand(rest, groups)
    if tag == "str":
        return Term.literal(text)
    if not text.strip():
        raise ValidationError(f"template {template!r} expanded to empty text")
    iri = ns.mint(_NAMESPACE_TAGS[tag], text)
    if tag in ("acc", "inst", "class"):
        labels_out.append(Triple(Term.iri(iri), Term.iri(ns.LABEL),
                                 Term.literal(text.strip())))
    return Term.iri(iri)


def _selector_texts(record: ReportRecord, selector: str) -> list[str]:
    if selector == "finding":
        return [f.rendered() for f in record.findings]
    if selector.startswith("field:"):
        key = selector[len("field:"):]
        value = record.fields.get(key, "")
        return [value] if value else []
    if selector == "narrative":
        return [text for _, text in record.narrative]
    raise ConfigError(f"unknown selector {selector!r}")


def extract_triples(record: ReportRecord,
                    patterns: list[ExtractionPattern]) -> list[Triple]:
    """Apply every pattern to its selected report part, in order.

    Each regex match yields one triple plus a label triple per minted
    IRI; duplicates are left to the graph's set semantics.
    """
    out: list[Triple] = []
    for pattern in patterns:
        for text in _selector_texts(record, pattern.selector):
            for match in pattern.regex.finditer(text):
                groups = {"accident_number": record.accident_number}
                groups.update({k: v for k, v in match.groupdict().items() if v is not None})
                labels: list[Triple] = []
                subject = _resolve(pattern.subject, groups, labels)
                predicate = _resolve(pattern.predicate, groups, [])
                obj = _resolve(pattern.object, groups, labels)
                out.append(Triple(subject, predicate, obj))
                out.extend(labels)
    return out


# ---------------------------------------------------------------------------
# Passages.

def extract_passages(record: ReportRecord) -> list[Passage]:
    """One passage per narrative paragraph, tagged with its section heading."""
    return [
        Passage(heading=heading, text=text, report_id=record.accident_number)
        for heading, text in record.narrative
    ]


class PassageFormat(Enum):
    JSON = "json"
    JSONL = "jsonl"


def _passage_dict(p: Passage) -> dict[str, str]:
    return {"heading": p.heading, "text": p.text, "report_id": p.report_id}


def export_passages(passages: list[Passage], mode: PassageFormat) -> str:
    if mode is PassageFormat.JSON:
        return json.dumps([_passage_dict(p) for p in passages], ensure_ascii=False, indent=2)
    return "\n".join(json.dumps(_passage_dict(p), ensure_ascii=False) for p in passages)


def import_passages(text: str, mode: PassageFormat) -> list[Passage]:
    """Inverse of :func:`export_passages`."""
    if mode is PassageFormat.JSON:
        rows = json.loads(text)
    else:
        rows = [json.loads(line) for line in text.split("\n") if line.strip()]
    out = []
    for row in rows:
        try:
            passage = Passage(row["heading"], row["text"], row["report_id"])
        except KeyError as exc:
            raise ParseError(f"passage row is missing key {exc}") from exc
        if not passage.text:
            raise ParseError("passage row has empty text")
        out.append(passage)
    return out
