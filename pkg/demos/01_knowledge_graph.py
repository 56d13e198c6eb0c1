"""Build the aviation knowledge graph from the bundled reports and query it.

Run from the repository root:  python demos/01_knowledge_graph.py
"""

from pathlib import Path

from aeroqa.engine import build_artifacts
from aeroqa.triplestore import parse_sparql, execute, serialize

ROOT = Path(__file__).resolve().parent.parent

# parse the five fixture reports, extract triples with the declarative
# pattern file, and map finding causes onto the occurrence taxonomy
result = build_artifacts(ROOT / "data/reports", ROOT / "data/patterns.json",
                         ROOT / "data/taxonomy.txt")
graph = result.graph

print("knowledge graph statistics")
for key, value in result.stats.as_dict().items():
    print(f"  {key}: {value}")
print(f"  passages extracted: {len(result.passages)}")

# the store speaks a small SPARQL subset: ASK, SELECT DISTINCT, COUNT
print("\naccidents that happened in snow:")
query = parse_sparql("""
PREFIX rel: <http://aviation.example/rel/>
PREFIX inst: <http://aviation.example/inst/>
SELECT DISTINCT ?acc WHERE { ?acc rel:occurredInWeather inst:Snow }
""")
for term in execute(graph, query):
    print(" ", term.value)

print("\nhow many accidents were manufactured by Cessna?")
count = parse_sparql("""
PREFIX rel: <http://aviation.example/rel/>
PREFIX inst: <http://aviation.example/inst/>
SELECT (COUNT(DISTINCT ?acc) AS ?c) WHERE { ?acc rel:manufacturedBy inst:Cessna }
""")
print(" ", execute(graph, count))

# a two-pattern join: operator and manufacturer on the same accident
print("\nmulti-hop: operated by Johnny Thornley AND manufactured by Subaru:")
join = parse_sparql("""
PREFIX rel: <http://aviation.example/rel/>
PREFIX inst: <http://aviation.example/inst/>
SELECT DISTINCT ?acc WHERE {
  ?acc rel:operatedBy inst:Johnny_Thornley .
  ?acc rel:manufacturedBy inst:Subaru
}
""")
for term in execute(graph, join):
    print(" ", term.value)

# the graph round-trips through a line-oriented text format
text = serialize(graph)
print(f"\nserialized KG: {len(text.splitlines())} lines, first three:")
for line in text.splitlines()[:3]:
    print(" ", line)
