"""Server configuration, resolved from arguments and environment."""

from __future__ import annotations

import os
from dataclasses import dataclass

HASHED = "hashed"      # built-in deterministic encoder
OVERLAP = "overlap"    # built-in lexical span reader
ECHO = "echo"          # built-in abstractive fallback


@dataclass(frozen=True)
class ServerConfig:
    embed_model: str = HASHED
    extractive_model: str = OVERLAP
    generative_model: str = ECHO
    port: int = 8600
    max_batch: int = 64

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max batch size must be >= 1")

    @staticmethod
    def from_env(**overrides) -> "ServerConfig":
        values = {
            "embed_model": os.environ.get("MODELSERVER_EMBED_MODEL", HASHED),
            "extractive_model": os.environ.get("MODELSERVER_EXTRACTIVE_MODEL", OVERLAP),
            "generative_model": os.environ.get("MODELSERVER_GENERATIVE_MODEL", ECHO),
            "port": int(os.environ.get("MODELSERVER_PORT", "8600")),
            "max_batch": int(os.environ.get("MODELSERVER_MAX_BATCH", "64")),
        }
        values.update(overrides)
        return ServerConfig(**values)
