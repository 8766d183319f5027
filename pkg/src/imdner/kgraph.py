"""Rule-based relation extraction over tagged entities and graph export.

Relations are deterministic co-occurrence rules: a (head, tail) label pair
within a sentence-distance window produces one directed edge. Node identity
is the lowercased, whitespace-normalized surface form plus its label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Document, LabelSet, tags_to_spans
from .errors import ConfigError, ValidationError


@dataclass(frozen=True)
class RelationRule:
    head_label: str
    tail_label: str
    relation_name: str
    window: int = 1  # max sentence distance

    def __post_init__(self):
        if not self.relation_name:
            raise ValidationError("relation_name must be non-empty")
        if self.window < 0:
            raise ValidationError("window must be non-negative")


DEFAULT_RULES = (
    RelationRule("Immune_Mediated_Disease", "Symptom", "HAS_SYMPTOM", window=1),
    RelationRule("Immune_Mediated_Disease", "Treatment", "TREATED_WITH", window=1),
    RelationRule("Immune_Mediated_Disease", "Biomarker", "HAS_BIOMARKER", window=1),
    RelationRule("Immune_Mediated_Disease", "Other_Disease_Disorder", "COMORBID_WITH", window=1),
)


@dataclass(frozen=True)
class Node:
    text: str  # normalized surface form
    label: str


@dataclass(frozen=True)
class Edge:
    head: Node
    tail: Node
    relation: str


@dataclass
class EntityGraph:
    nodes: set[Node] = field(default_factory=set)
    edges: set[Edge] = field(default_factory=set)


def _normalize(text: str) -> str:
    return " ".join(text.split()).lower()


def _mentions(doc: Document):
    """(sentence_index, Node) for every entity mention in the document."""
    out = []
    for s, sent in enumerate(doc.sentences):
        for span in tags_to_spans(sent, sentence_index=s):
            surface = " ".join(t.text for t in sent.tokens[span.start: span.end])
            out.append((s, Node(_normalize(surface), span.label)))
    return out


def extract_graph(docs: list[Document], rules: list[RelationRule] = DEFAULT_RULES, labels: LabelSet | None = None) -> EntityGraph:
    labels = labels or LabelSet()
    for rule in rules:
        for lab in (rule.head_label, rule.tail_label):
            if lab not in labels:
                raise ConfigError(f"rule {rule.relation_name} references unknown label {lab!r}")

    graph = EntityGraph()
    for doc in docs:
        mentions = _mentions(doc)
        graph.nodes.update(node for _, node in mentions)
        for rule in rules:
            heads = [(s, n) for s, n in mentions if n.label == rule.head_label]
            tails = [(s, n) for s, n in mentions if n.label == rule.tail_label]
            for hs, head in heads:
                for ts, tail in tails:
                    if head != tail and abs(hs - ts) <= rule.window:
                        graph.edges.add(Edge(head, tail, rule.relation_name))
    return graph


def _sorted_nodes(graph: EntityGraph):
    return sorted(graph.nodes, key=lambda n: (n.label, n.text))


def _sorted_edges(graph: EntityGraph):
    return sorted(
        graph.edges,
        key=lambda e: (e.head.label, e.head.text, e.tail.label, e.tail.text, e.relation),
    )


# Fill colors for DOT rendering, keyed by default schema label.
_LABEL_COLORS = {
    "Bacterial_Infection": "lightsalmon",
    "Biomarker": "khaki",
    "Fungal_Infection": "peachpuff",
    "Geographical_Location": "lightcyan",
    "Immune_Mediated_Disease": "lightcoral",
    "Other_Disease_Disorder": "plum",
    "Other_Test": "lightsteelblue",
    "Rad_Test": "powderblue",
    "Symptom": "lightgreen",
    "Test_Result": "wheat",
    "Treatment": "lightskyblue",
    "Viral_Infection": "mistyrose",
}


def export_graph(graph: EntityGraph, format: str = "structured") -> bytes:
    """Serialize the graph: 'structured' (JSON) or 'dot' (Graphviz text)."""
    if format == "structured":
        import json

        doc = {
            "nodes": [{"text": n.text, "label": n.label} for n in _sorted_nodes(graph)],
            "edges": [
                {
                    "head": {"text": e.head.text, "label": e.head.label},
                    "tail": {"text": e.tail.text, "label": e.tail.label},
                    "relation": e.relation,
                }
                for e in _sorted_edges(graph)
            ],
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")

    if format == "dot":
        def node_id(n: Node) -> str:
            return f"{n.label}::{n.text}".replace('"', r"\"")

        lines = ["digraph entities {", "  rankdir=LR;", "  node [style=filled];"]
        for n in _sorted_nodes(graph):
            color = _LABEL_COLORS.get(n.label, "lightgray")
            text = n.text.replace('"', r"\"")
            lines.append(f'  "{node_id(n)}" [label="{text}" fillcolor="{color}"];')
        for e in _sorted_edges(graph):
            lines.append(f'  "{node_id(e.head)}" -> "{node_id(e.tail)}" [label="{e.relation}"];')
        lines.append("}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    raise ConfigError(f"unknown export format {format!r} (expected 'structured' or 'dot')")
