"""Sidecar serving text embeddings and reading-comprehension answers.

The wire contract is two JSON endpoints: POST /embed returns unit-norm
fixed-dimension vectors, POST /read returns ranked answers whose
extractive spans are verbatim substrings of their source passage. Model
choice is configuration, not contract: the default backends are
deterministic and dependency-free, and learned models slot in behind
the same endpoints when configured.
"""

__version__ = "0.1.0"
