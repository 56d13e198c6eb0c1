"""Sparse and dense passage retrieval plus the extractive reader.

Run from the repository root:  python demos/03_retriever_reader.py
"""

from pathlib import Path

from aeroqa.embeddings import HashedNgramProvider
from aeroqa.engine import build_artifacts
from aeroqa.reader import ReaderConfig, Retriever, dlqa_answer, read_extractive_fallback
from aeroqa.retrieval import build_index, retrieve_bm25, retrieve_dense

ROOT = Path(__file__).resolve().parent.parent
passages = build_artifacts(ROOT / "data/reports", ROOT / "data/patterns.json").passages
index = build_index(passages)
provider = HashedNgramProvider()

question = ("What discrepancy was noted due to which flight landed at "
            "La Belle Municipal Airport?")
print("question:", question)

print("\ntop 3 passages by BM25 (k1=1.2, b=0.75):")
for hit in retrieve_bm25(index, question, k=3):
    print(f"  {hit.score:6.3f}  [{hit.passage.report_id}/{hit.passage.heading}] "
          f"{hit.passage.text[:70]}...")

print("\ntop 3 passages by dense cosine over hashed n-gram embeddings:")
for hit in retrieve_dense(passages, question, provider, k=3):
    print(f"  {hit.score:6.3f}  [{hit.passage.report_id}/{hit.passage.heading}] "
          f"{hit.passage.text[:70]}...")

# the reader slides a sentence window over each retrieved passage and
# trims stopwords from the edges, so every answer is a verbatim span
top = [h.passage for h in retrieve_bm25(index, question, k=3)]
print("\nextractive reader answers:")
for answer in read_extractive_fallback(question, top)[:3]:
    print(f"  {answer.score:.3f}  {answer.text!r}")

# retriever + reader composed, as the answer stream the fusion layer consumes
print("\nretriever-reader pairs (answer, source report):")
for answer, passage in dlqa_answer(question, index, Retriever.BM25,
                                   ReaderConfig(), k=3, budget=3):
    print(f"  [{passage.report_id}] {answer!r}")
