"""Turn annotated text into a small knowledge graph.

The rules link a disease mention to nearby symptom, treatment, biomarker,
and comorbidity mentions within a sentence window. Run from the repository
root:

    python3 demos/03_knowledge_graph.py
"""

from pathlib import Path

from imdner.corpus import parse_conll
from imdner.kgraph import DEFAULT_RULES, export_graph, extract_graph

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    docs = parse_conll((DATA / "sle_narrative.conll").read_text(), name="sle_narrative")
    print("input sentences:")
    for sent in docs[0].sentences:
        print("  " + " ".join(t.text for t in sent.tokens))

    # Nodes are normalized mentions (lowercased, whitespace collapsed), so
    # "SLE" and "sle" collapse into one node. Edges come from the rules:
    # each fires when the head and tail entities occur within `window`
    # sentences of each other.
    graph = extract_graph(docs, DEFAULT_RULES)
    print(f"\n{len(graph.nodes)} nodes, {len(graph.edges)} edges")
    for edge in sorted(graph.edges, key=lambda e: (e.relation, e.head.text, e.tail.text)):
        print(f"  ({edge.head.text}) -[{edge.relation}]-> ({edge.tail.text})")

    # Two export formats: machine-readable JSON and Graphviz DOT.
    out_dir = Path(__file__).resolve().parent
    (out_dir / "sle_graph.json").write_bytes(export_graph(graph, "structured"))
    (out_dir / "sle_graph.dot").write_bytes(export_graph(graph, "dot"))
    print("\nwrote sle_graph.json and sle_graph.dot")
    print("render with: dot -Tpng demos/sle_graph.dot -o sle_graph.png")


if __name__ == "__main__":
    main()
