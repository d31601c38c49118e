"""Merged sensemaking graph and its JSON / Graphviz DOT renderings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .core import EvidenceKind, HypothesisKind, Objectives, SceneGraphSequence, SolutionSet
from .hypeval import Pool, as_index, concept_node, effective_scores
from .ingest import KnowledgeBase

SCHEMA_VERSION = 1

KIND_COLORS = {
    HypothesisKind.REFERENTIAL_IS.value: "blue",
    HypothesisKind.CAUSAL_SEQUENCE.value: "orange",
    HypothesisKind.AFFECTIVE.value: "green",
}
CONCEPT_COLOR = "purple"
OBSERVED_COLOR = "black"
MIN_PENWIDTH = 0.5


@dataclass(frozen=True)
class GraphNode:
    id: str
    label: str
    kind: str  # existent | event | concept
    origin: str  # observed | concept
    image_index: int | None = None

    def to_dict(self) -> dict[str, Any]:
        d = {"id": self.id, "label": self.label, "kind": self.kind, "origin": self.origin}
        if self.image_index is not None:
            d["image_index"] = self.image_index
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GraphNode:
        return cls(d["id"], d["label"], d["kind"], d["origin"], d.get("image_index"))


@dataclass(frozen=True)
class GraphEdge:
    source: str
    target: str
    label: str
    origin: str  # observed | concept | hypothesis
    kind: str | None = None
    hypothesis: str | None = None
    score: float | None = None
    weight: float | None = None
    evidence: tuple[dict[str, Any], ...] = ()

    def sort_key(self) -> tuple:
        return (self.origin, self.source, self.target, self.label, self.hypothesis or "")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"source": self.source, "target": self.target, "label": self.label, "origin": self.origin}
        if self.kind is not None:
            d["kind"] = self.kind
        if self.hypothesis is not None:
            d["hypothesis"] = self.hypothesis
        if self.score is not None:
            d["score"] = self.score
        if self.weight is not None:
            d["weight"] = self.weight
        if self.evidence:
            d["evidence"] = list(self.evidence)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GraphEdge:
        return cls(d["source"], d["target"], d["label"], d["origin"], d.get("kind"), d.get("hypothesis"),
                   d.get("score"), d.get("weight"), tuple(d.get("evidence", ())))


@dataclass(frozen=True)
class SensemakingGraph:
    nodes: tuple[GraphNode, ...] = ()
    edges: tuple[GraphEdge, ...] = ()
    objectives: Objectives = field(default_factory=Objectives)
    scalar_score: float = 0.0

    def edges_of(self, origin: str) -> list[GraphEdge]:
        return [e for e in self.edges if e.origin == origin]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "objectives": self.objectives.to_dict(),
            "scalar_score": self.scalar_score,
            "nodes": [n.to_dict() for n in self.nodes],
            "edges": [e.to_dict() for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SensemakingGraph:
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {version!r}")
        return cls(
            tuple(GraphNode.from_dict(n) for n in d["nodes"]),
            tuple(GraphEdge.from_dict(e) for e in d["edges"]),
            Objectives.from_dict(d["objectives"]),
            float(d["scalar_score"]),
        )


def build_sensemaking_graph(sequence: SceneGraphSequence, kb: KnowledgeBase | None,
                            solution: SolutionSet, pool: Pool) -> SensemakingGraph:
    index = as_index(pool)
    scores = effective_scores(solution.accepted, index)
    nodes: dict[str, GraphNode] = {}
    edges: dict[tuple, GraphEdge] = {}

    def add_edge(e: GraphEdge) -> None:
        edges.setdefault(e.sort_key(), e)

    def add_concept(c: str) -> str:
        nid = concept_node(c)
        nodes.setdefault(nid, GraphNode(nid, c, "concept", "concept"))
        return nid

    for ex in sequence.existents:
        nodes[ex.id] = GraphNode(ex.id, ex.label, "existent", "observed", ex.image_index)
        if ex.concept is not None:
            add_edge(GraphEdge(ex.id, add_concept(ex.concept), "concept", "concept"))
    for ev in sequence.events:
        nodes[ev.id] = GraphNode(ev.id, ev.predicate, "event", "observed", ev.image_index)
        add_edge(GraphEdge(ev.subject_id, ev.id, "subject", "observed"))
        if ev.object_id is not None:
            add_edge(GraphEdge(ev.id, ev.object_id, "object", "observed"))
        if ev.concept is not None:
            add_edge(GraphEdge(ev.id, add_concept(ev.concept), "concept", "concept"))

    for hid in solution.ids:
        h = index[hid]
        for item in h.evidence:
            if item.kind is EvidenceKind.KNOWLEDGE and item.path:
                for step in item.path:
                    e = step.edge
                    add_edge(GraphEdge(add_concept(e.start), add_concept(e.end), e.relation, "concept", weight=e.weight))
        target = add_concept(h.object) if h.kind is HypothesisKind.AFFECTIVE else h.object
        label = h.relation if h.kind is HypothesisKind.AFFECTIVE else h.kind.value
        add_edge(GraphEdge(h.subject, target, label, "hypothesis", kind=h.kind.value, hypothesis=hid,
                           score=scores[hid], evidence=tuple(e.to_dict() for e in h.evidence)))

    return SensemakingGraph(
        tuple(nodes[k] for k in sorted(nodes)),
        tuple(edges[k] for k in sorted(edges)),
        solution.objectives,
        solution.scalar_score,
    )


def export_json(graph: SensemakingGraph) -> bytes:
    return (json.dumps(graph.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def load_graph_json(data: str | bytes) -> SensemakingGraph:
    return SensemakingGraph.from_dict(json.loads(data))


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def penwidth(score: float) -> float:
    return round(max(MIN_PENWIDTH, score), 3)


def export_dot(graph: SensemakingGraph) -> bytes:
    lines = ["digraph sensemaking {", "  rankdir=LR;"]
    for n in graph.nodes:
        if n.kind == "concept":
            attrs = f"label={_q(n.label)}, shape=ellipse, color={CONCEPT_COLOR}, fontcolor={CONCEPT_COLOR}"
        elif n.kind == "event":
            attrs = f"label={_q(n.label)}, shape=diamond"
        else:
            attrs = f"label={_q(n.label)}, shape=box"
        lines.append(f"  {_q(n.id)} [{attrs}];")
    for e in graph.edges:
        if e.origin == "hypothesis":
            color = KIND_COLORS.get(e.kind or "", OBSERVED_COLOR)
            attrs = f"label={_q(e.label)}, color={color}, penwidth={penwidth(e.score or 0.0)}"
        elif e.origin == "concept":
            attrs = f"label={_q(e.label)}, color={CONCEPT_COLOR}, style=dashed"
        else:
            attrs = f"label={_q(e.label)}, color={OBSERVED_COLOR}"
        lines.append(f"  {_q(e.source)} -> {_q(e.target)} [{attrs}];")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")
