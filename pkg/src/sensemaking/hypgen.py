"""Candidate hypothesis generation with itemized evidence."""
from __future__ import annotations

from collections import defaultdict
from itertools import combinations

from .core import (
    Evidence,
    Hypothesis,
    HypothesisKind,
    KBEdge,
    PathStep,
    SceneGraphSequence,
    CoherenceCategory,
)
from .ingest import KnowledgeBase
from .kb_query import DEFAULT_MAX_PATH_LEN, affective_neighbors, find_paths, path_score

DEFAULT_EXACT_MATCH_R = 3.0


def referential_id(a: str, b: str) -> str:
    return f"is({a},{b})"


def causal_id(e1: str, e2: str) -> str:
    return f"seq({e1},{e2})"


def affective_id(character: str, relation: str, target: str) -> str:
    return f"aff({character},{relation},{target})"


def _canonical(hyps: list[Hypothesis]) -> list[Hypothesis]:
    return sorted(hyps, key=lambda h: (h.subject, h.object, h.relation or "", h.id))


def generate_referential(sequence: SceneGraphSequence, kb: KnowledgeBase | None = None) -> list[Hypothesis]:
    """One *is* hypothesis per cross-image pair of existents sharing a concept."""
    by_concept = defaultdict(list)
    for ex in sequence.existents:
        if ex.concept is not None:
            by_concept[ex.concept].append(ex)

    out = []
    for concept, members in by_concept.items():
        members.sort(key=lambda e: (e.image_index, e.id))
        for a, b in combinations(members, 2):
            if a.image_index == b.image_index:
                continue
            evidence = [Evidence.knowledge((), 1.0)]
            counts_b = b.attribute_counts()
            for name, n_a in sorted(a.attribute_counts().items()):
                if name in counts_b:
                    evidence.append(Evidence.observed_attribute(name, n_a, counts_b[name]))
            out.append(Hypothesis(referential_id(a.id, b.id), HypothesisKind.REFERENTIAL_IS,
                                  a.id, b.id, tuple(evidence)))
    return _canonical(out)


def generate_causal(sequence: SceneGraphSequence, kb: KnowledgeBase, referential: list[Hypothesis],
                    r: float = DEFAULT_EXACT_MATCH_R, max_len: int = DEFAULT_MAX_PATH_LEN) -> list[Hypothesis]:
    """*sequence* hypotheses between events of different images, earlier -> later."""
    linked = {frozenset((h.subject, h.object)): h.id for h in referential
              if h.kind is HypothesisKind.REFERENTIAL_IS}
    events = sorted(sequence.events, key=lambda e: (e.image_index, e.id))

    out = []
    for e1, e2 in combinations(events, 2):
        if e1.image_index == e2.image_index:
            continue
        evidence: list[Evidence] = []
        if e1.concept is not None and e2.concept is not None:
            for path in find_paths(kb, e1.concept, e2.concept, CoherenceCategory.CAUSAL, max_len):
                evidence.append(Evidence.knowledge(path.steps, path_score(path)))

        pairs = sorted({(p1, p2) for p1 in e1.participants for p2 in e2.participants})
        for p1, p2 in pairs:
            if p1 == p2:
                evidence.append(Evidence.exact_match(p1, r))
                continue
            hid = linked.get(frozenset((p1, p2)))
            if hid is not None:
                evidence.append(Evidence.premised_on(hid))

        if evidence:
            out.append(Hypothesis(causal_id(e1.id, e2.id), HypothesisKind.CAUSAL_SEQUENCE,
                                  e1.id, e2.id, tuple(evidence)))
    return _canonical(out)


def generate_affective(sequence: SceneGraphSequence, kb: KnowledgeBase) -> list[Hypothesis]:
    """Affect of characters, read off one-hop affective edges of their events' concepts.

    The same (character, relation, target) reached from several events becomes
    a single hypothesis with one knowledge item per originating edge.
    """
    collected: dict[tuple[str, str, str], list[Evidence]] = defaultdict(list)
    for ev in sorted(sequence.events, key=lambda e: (e.image_index, e.id)):
        if ev.concept is None:
            continue
        neighbors = affective_neighbors(kb, ev.concept)
        if not neighbors:
            continue
        for pid in dict.fromkeys(ev.participants):
            if not kb.is_character(sequence.existent(pid).concept):
                continue
            for relation, target, weight in neighbors:
                step = PathStep(KBEdge(ev.concept, relation, target, weight))
                collected[(pid, relation, target)].append(Evidence.knowledge((step,), weight))

    out = [
        Hypothesis(affective_id(pid, rel, target), HypothesisKind.AFFECTIVE, pid, target, tuple(ev), relation=rel)
        for (pid, rel, target), ev in collected.items()
    ]
    return _canonical(out)


def generate_pool(sequence: SceneGraphSequence, kb: KnowledgeBase, r: float = DEFAULT_EXACT_MATCH_R,
                  max_len: int = DEFAULT_MAX_PATH_LEN) -> list[Hypothesis]:
    referential = generate_referential(sequence, kb)
    causal = generate_causal(sequence, kb, referential, r=r, max_len=max_len)
    affective = generate_affective(sequence, kb)
    return referential + causal + affective
