"""IRI namespaces and minting rules for the aviation knowledge graph.

Instance labels become IRIs by replacing whitespace runs with ``_`` and
percent-encoding every remaining byte outside ``[A-Za-z0-9_-]``.  Each
minted instance gets a companion label triple so the original surface
text survives for entity linking and answer rendering.
"""

from __future__ import annotations

import re

BASE = "http://aviation.example/"

CLASS = BASE + "class/"
INST = BASE + "inst/"
ACC = BASE + "acc/"
REL = BASE + "rel/"
DATA = BASE + "data/"
LABEL = BASE + "label"

# Prefixes used when emitting and abbreviating SPARQL. Longest base wins
# on abbreviation, so avi: only covers IRIs outside the specific spaces.
DEFAULT_PREFIXES = {
    "avi": BASE,
    "class": CLASS,
    "inst": INST,
    "acc": ACC,
    "rel": REL,
    "data": DATA,
}

_SAFE = frozenset(
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-"
)


def slugify(text: str) -> str:
    """Turn surface text into an IRI-safe local name."""
    collapsed = re.sub(r"\s+", "_", text.strip())
    out = []
    for byte in collapsed.encode("utf-8"):
        if byte in _SAFE:
            out.append(chr(byte))
        else:
            out.append(f"%{byte:02X}")
    return "".join(out)


def mint(namespace: str, text: str) -> str:
    return namespace + slugify(text)


def local_name(iri: str) -> str:
    """Final path segment of an IRI (after the last ``/`` or ``#``)."""
    tail = iri.rsplit("/", 1)[-1]
    return tail.rsplit("#", 1)[-1]


def _unquote(name: str) -> str:
    return re.sub(r"%([0-9A-Fa-f]{2})", lambda m: chr(int(m.group(1), 16)), name)


def display_name(iri: str) -> str:
    """Human-readable fallback when an IRI carries no label triple."""
    return _unquote(local_name(iri)).replace("_", " ")


def relation_words(iri: str) -> str:
    """De-camel-cased rendering of a relation local name.

    ``isCausedByAircraftIssue`` -> ``is caused by aircraft issue``.
    """
    name = _unquote(local_name(iri)).replace("_", " ")
    spaced = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", name)
    return spaced.lower()
