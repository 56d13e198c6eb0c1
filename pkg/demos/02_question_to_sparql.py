"""Walk a natural-language question through every stage of the KGQA pipeline.

Run from the repository root:  python demos/02_question_to_sparql.py
"""

from pathlib import Path

from aeroqa.embeddings import HashedNgramProvider
from aeroqa.engine import build_artifacts
from aeroqa.nl2sparql import (classify_question, extract_mentions, generate_triples,
                              link, rank_triples, MentionKind, translate)

ROOT = Path(__file__).resolve().parent.parent
graph = build_artifacts(ROOT / "data/reports", ROOT / "data/patterns.json").graph
provider = HashedNgramProvider()

question = ("Which accidents involved aircraft operated by Johnny Thornley "
            "and manufactured by Subaru?")
print("question:", question)

# stage 1: question type decides the SPARQL keyword
qtype = classify_question(question)
print("\n1. question type:", qtype.value)

# stage 2: entity and relation mentions
mentions = extract_mentions(question)
print("\n2. mentions:")
for m in mentions:
    print(f"   {m.kind_hint.value:8s} {m.surface!r}")

# stage 3: link mentions to KG terms by embedding similarity
candidates = link(mentions, graph, provider)
print("\n3. linked candidates (similarity >= 0.6, top 3 per mention):")
for c in candidates:
    print(f"   {c.mention.surface!r} -> {c.kg_term.value} ({c.similarity:.2f})")

# stage 4: generate triple patterns from permutations, keep the ASK-valid ones
entities = [c for c in candidates if c.mention.kind_hint is MentionKind.ENTITY]
relations = [c for c in candidates if c.mention.kind_hint is MentionKind.RELATION]
valid = generate_triples(entities, relations, graph)
print(f"\n4. {len(valid)} candidates survive the ASK probe")

# stage 5: rank by token overlap with the question
ranked = rank_triples(valid, question)
for cand in ranked[:3]:
    print(f"   {cand.rank_score:.3f}  {cand.verbalization}")

# stage 6: construct, execute, answer
result = translate(question, graph, provider)
print("\n5. constructed query:\n" + result.query_text)
print("\n6. answers:", result.answers)

# the pipeline abstains rather than guessing when nothing links
missing = translate("Why did the pilot divert to La Belle Municipal Airport?",
                    graph, provider)
print("\ncoverage-gap question ->", "abstained" if missing is None else missing.answers)
