"""Embedding backends. All encoders emit unit-norm float vectors of a
dimension that stays constant for the process lifetime."""

from __future__ import annotations

import hashlib
import logging
from typing import Protocol, Sequence

import numpy as np

from .config import HASHED

log = logging.getLogger(__name__)


class Encoder(Protocol):
    dim: int

    def encode(self, texts: Sequence[str]) -> list[list[float]]: ...


class HashedEncoder:
    """Character trigram sign-hashing; deterministic and dependency-free."""

    def __init__(self, dim: int = 256, n: int = 3):
        self.dim = dim
        self.n = n

    def _vector(self, text: str) -> np.ndarray:
        lowered = text.lower()
        vec = np.zeros(self.dim, dtype=np.float64)
        if not lowered:
            return vec
        if len(lowered) < self.n:
            grams = [lowered]
        else:
            grams = [lowered[i:i + self.n] for i in range(len(lowered) - self.n + 1)]
        for gram in grams:
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if value & 1 == 0 else -1.0
            vec[(value >> 1) % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._vector(t).tolist() for t in texts]


class SentenceTransformerEncoder:
    """Learned sentence embeddings; requires the ml extra and a local model."""

    def __init__(self, model_id: str):
        from sentence_transformers import SentenceTransformer  # lazy, heavy

        self._model = SentenceTransformer(model_id)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        vectors = self._model.encode(list(texts), normalize_embeddings=True,
                                     convert_to_numpy=True)
        return [row.astype(float).tolist() for row in vectors]


def build_encoder(model_id: str) -> Encoder:
    if model_id == HASHED:
        return HashedEncoder()
    try:
        return SentenceTransformerEncoder(model_id)
    except Exception as exc:  # noqa: BLE001 - startup degradation is deliberate
        log.warning("cannot load embedding model %r (%s); using hashed encoder",
                    model_id, exc)
        return HashedEncoder()
