"""Hybrid question answering over accident reports.

Two answer streams -- SPARQL-subset queries against a locally built
knowledge graph, and a retriever-reader pipeline over raw passages --
fused under a fixed 10-slot quota and scored with exact/semantic
accuracy and recall metrics.
"""

__version__ = "0.1.0"
