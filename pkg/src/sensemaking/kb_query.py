"""Category-filtered path queries over a :class:`KnowledgeBase`."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import CoherenceCategory, ConceptId, PathStep
from .ingest import KnowledgeBase

DEFAULT_MAX_PATH_LEN = 3


@dataclass(frozen=True)
class KBPath:
    steps: tuple[PathStep, ...]
    category: CoherenceCategory

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def concepts(self) -> tuple[ConceptId, ...]:
        if not self.steps:
            return ()
        return (self.steps[0].source,) + tuple(s.target for s in self.steps)

    def sort_key(self) -> tuple:
        return (len(self.steps), tuple(path_step_label(s) for s in self.steps))


def path_step_label(step: PathStep) -> tuple:
    e = step.edge
    return (e.start, e.relation, e.end, step.inverse, e.weight)


def find_paths(kb: KnowledgeBase, src: ConceptId, dst: ConceptId,
               category: CoherenceCategory, max_len: int = DEFAULT_MAX_PATH_LEN) -> list[KBPath]:
    """All simple paths from ``src`` to ``dst`` of at most ``max_len`` edges.

    Edges may be walked against their stored direction. The empty path is
    returned when ``src == dst``. Order: shortest first, then by edge labels.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if src not in kb or dst not in kb:
        return []
    if src == dst:
        return [KBPath((), category)]

    found: list[KBPath] = []
    trail: list[PathStep] = []
    visited = {src}

    def walk(node: ConceptId) -> None:
        for step in kb.steps_from(node, category):
            nxt = step.target
            if nxt in visited:
                continue
            trail.append(step)
            if nxt == dst:
                found.append(KBPath(tuple(trail), category))
            elif len(trail) < max_len:
                visited.add(nxt)
                walk(nxt)
                visited.discard(nxt)
            trail.pop()

    walk(src)
    found.sort(key=KBPath.sort_key)
    return found


def path_score(path: KBPath) -> float:
    if not path.steps:
        return 1.0
    return math.fsum(s.edge.weight for s in path.steps) / len(path.steps)


def affective_neighbors(kb: KnowledgeBase, concept: ConceptId | None) -> list[tuple[str, ConceptId, float]]:
    """Outgoing one-hop affective edges of ``concept`` as (relation, target, weight)."""
    if concept is None or concept not in kb:
        return []
    out = [(e.relation, e.end, e.weight) for e in kb.outgoing(concept, CoherenceCategory.AFFECTIVE)]
    return sorted(out)
