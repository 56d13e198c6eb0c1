"""Text embedding providers and similarity kernels.

Three providers share one contract (fixed output dimension, same input ->
same output): a deterministic hashed character n-gram embedder that works
offline, a file-backed lookup with hashed fallback, and a client for a
remote /embed service.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import requests

from .errors import ParseError, RemoteError, ValidationError

DEFAULT_DIM = 256
DEFAULT_NGRAM = 3


def _bucket_and_sign(gram: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "big")
    sign = 1.0 if value & 1 == 0 else -1.0
    return (value >> 1) % dim, sign


def embed_hashed(text: str, dim: int = DEFAULT_DIM, n: int = DEFAULT_NGRAM) -> np.ndarray:
    """Hash the character n-gram multiset of lowercased text into a unit vector.

    Text shorter than ``n`` characters contributes itself as a single
    gram so short identifiers still embed; empty text is the zero vector.
    """
    if dim < 8:
        raise ValidationError("hashed embedding dim must be >= 8")
    if n < 2:
        raise ValidationError("hashed embedding n-gram size must be >= 2")
    lowered = text.lower()
    vec = np.zeros(dim, dtype=np.float64)
    if not lowered:
        return vec
    if len(lowered) < n:
        grams: Sequence[str] = (lowered,)
    else:
        grams = [lowered[i:i + n] for i in range(len(lowered) - n + 1)]
    for gram in grams:
        bucket, sign = _bucket_and_sign(gram, dim)
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; defined 0 when either vector has zero norm."""
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class EmbeddingProvider:
    """Base provider: fixed dim, deterministic per input."""

    dim: int

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


@dataclass
class HashedNgramProvider(EmbeddingProvider):
    dim: int = DEFAULT_DIM
    n: int = DEFAULT_NGRAM
    _cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def embed(self, text: str) -> np.ndarray:
        hit = self._cache.get(text)
        if hit is None:
            hit = embed_hashed(text, self.dim, self.n)
            self._cache[text] = hit
        return hit


class FileBackedProvider(EmbeddingProvider):
    """Exact vectors from a TSV file, hashed fallback for misses."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int, n: int = DEFAULT_NGRAM):
        self.vectors = vectors
        self.dim = dim
        self._fallback = HashedNgramProvider(dim=dim, n=n)

    def embed(self, text: str) -> np.ndarray:
        hit = self.vectors.get(text)
        if hit is not None:
            return hit
        return self._fallback.embed(text)


def load_vectors(path: str) -> FileBackedProvider:
    """Load ``text<TAB>v1 v2 ... vd`` lines; all rows must share one dim."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            if "\t" not in line:
                raise ParseError("expected `text<TAB>components` row", lineno)
            key, _, rest = line.rstrip("\n").partition("\t")
            try:
                values = np.array([float(x) for x in rest.split()], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"bad vector component: {exc}", lineno) from exc
            if values.size == 0:
                raise ParseError("vector row has no components", lineno)
            if not np.all(np.isfinite(values)):
                raise ParseError("vector row has non-finite components", lineno)
            if dim is None:
                dim = int(values.size)
            elif values.size != dim:
                raise ParseError(
                    f"ragged vector file: expected dim {dim}, got {values.size}", lineno)
            vectors[key] = values
    if dim is None:
        raise ParseError("vector file contains no rows")
    return FileBackedProvider(vectors, dim)


def embed_remote(texts: Sequence[str], endpoint: str,
                 timeout: float = 10.0) -> list[np.ndarray]:
    """POST /embed and validate the response shape.

    Raises :class:`RemoteError` on transport failure, count mismatch, or
    non-finite components; callers decide whether to fall back.
    """
    if not texts:
        return []
    url = endpoint.rstrip("/") + "/embed"
    try:
        resp = requests.post(url, json={"texts": list(texts)}, timeout=timeout)
        resp.raise_for_status()
        payload = resp.json()
    except (requests.RequestException, ValueError) as exc:
        raise RemoteError(f"embed request to {url} failed: {exc}") from exc
    vectors = payload.get("vectors")
    dim = payload.get("dim")
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        got = len(vectors) if isinstance(vectors, list) else "none"
        raise RemoteError(f"embed response has {got} vectors for {len(texts)} texts")
    out = []
    for row in vectors:
        arr = np.asarray(row, dtype=np.float64)
        if arr.ndim != 1 or (dim is not None and arr.size != dim):
            raise RemoteError(f"embed response vector has shape {arr.shape}, dim {dim}")
        if not np.all(np.isfinite(arr)):
            raise RemoteError("embed response contains non-finite values")
        out.append(arr)
    if len({v.size for v in out}) > 1:
        raise RemoteError("embed response vectors are ragged")
    return out


class RemoteProvider(EmbeddingProvider):
    """Provider backed by the /embed wire protocol."""

    def __init__(self, endpoint: str, dim: int | None = None, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.dim = dim or 0  # discovered on first call

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            return []
        vectors = embed_remote(texts, self.endpoint, self.timeout)
        if self.dim and vectors and vectors[0].size != self.dim:
            raise RemoteError(
                f"remote dim changed: expected {self.dim}, got {vectors[0].size}")
        if not self.dim and vectors:
            self.dim = int(vectors[0].size)
        return vectors
