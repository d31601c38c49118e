"""Shared domain types for scene graphs, knowledge edges, hypotheses and solutions.

Everything here is immutable. ``validate`` reports invariant violations as a
list of strings instead of raising, so callers can decide how loud to be.
"""
from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

ConceptId = str

_WS = re.compile(r"\s+")


def normalize_attribute(name: str) -> str:
    """Lowercase, trim, collapse internal whitespace."""
    return _WS.sub(" ", name.strip().lower())


class CoherenceCategory(str, enum.Enum):
    REFERENTIAL = "referential"
    CAUSAL = "causal"
    AFFECTIVE = "affective"
    SPATIAL = "spatial"
    TEMPORAL = "temporal"
    IGNORED = "ignored"


class EvidenceKind(str, enum.Enum):
    OBSERVATIONAL = "observational"
    KNOWLEDGE = "knowledge"
    PREMISE = "premise"


class HypothesisKind(str, enum.Enum):
    REFERENTIAL_IS = "is"
    CAUSAL_SEQUENCE = "sequence"
    AFFECTIVE = "affective"


# ---------------------------------------------------------------------------
# scene graphs


@dataclass(frozen=True)
class Attribute:
    name: str
    annotators: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "annotators": self.annotators}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Attribute:
        return cls(d["name"], int(d.get("annotators", 1)))


@dataclass(frozen=True)
class ExistentNode:
    id: str
    image_index: int
    label: str
    attributes: tuple[Attribute, ...] = ()
    concept: ConceptId | None = None

    def attribute_counts(self) -> dict[str, int]:
        return {normalize_attribute(a.name): a.annotators for a in self.attributes}

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "image_index": self.image_index,
            "label": self.label,
            "attributes": [a.to_dict() for a in self.attributes],
        }
        if self.concept is not None:
            d["concept"] = self.concept
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ExistentNode:
        return cls(
            id=d["id"],
            image_index=int(d["image_index"]),
            label=d["label"],
            attributes=tuple(Attribute.from_dict(a) for a in d.get("attributes", ())),
            concept=d.get("concept"),
        )


@dataclass(frozen=True)
class EventEdge:
    id: str
    image_index: int
    predicate: str
    subject_id: str
    object_id: str | None = None
    concept: ConceptId | None = None

    @property
    def participants(self) -> tuple[str, ...]:
        if self.object_id is None:
            return (self.subject_id,)
        return (self.subject_id, self.object_id)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "image_index": self.image_index,
            "predicate": self.predicate,
            "subject": self.subject_id,
        }
        if self.object_id is not None:
            d["object"] = self.object_id
        if self.concept is not None:
            d["concept"] = self.concept
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EventEdge:
        return cls(
            id=d["id"],
            image_index=int(d["image_index"]),
            predicate=d["predicate"],
            subject_id=d["subject"],
            object_id=d.get("object"),
            concept=d.get("concept"),
        )


@dataclass(frozen=True)
class ImageInfo:
    index: int
    source: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"index": self.index}
        if self.source is not None:
            d["source"] = self.source
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ImageInfo:
        src = d.get("source")
        return cls(int(d["index"]), None if src is None else str(src))


@dataclass(frozen=True)
class SceneGraphSequence:
    images: tuple[ImageInfo, ...] = ()
    existents: tuple[ExistentNode, ...] = ()
    events: tuple[EventEdge, ...] = ()

    def existent(self, node_id: str) -> ExistentNode:
        return self._existent_index()[node_id]

    def event(self, event_id: str) -> EventEdge:
        return self._event_index()[event_id]

    def _existent_index(self) -> dict[str, ExistentNode]:
        # cached on the frozen instance
        idx = self.__dict__.get("_ex_idx")
        if idx is None:
            idx = {e.id: e for e in self.existents}
            object.__setattr__(self, "_ex_idx", idx)
        return idx

    def _event_index(self) -> dict[str, EventEdge]:
        idx = self.__dict__.get("_ev_idx")
        if idx is None:
            idx = {e.id: e for e in self.events}
            object.__setattr__(self, "_ev_idx", idx)
        return idx

    def to_dict(self) -> dict[str, Any]:
        return {
            "images": [i.to_dict() for i in self.images],
            "existents": [e.to_dict() for e in self.existents],
            "events": [e.to_dict() for e in self.events],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SceneGraphSequence:
        return cls(
            images=tuple(ImageInfo.from_dict(i) for i in d.get("images", ())),
            existents=tuple(ExistentNode.from_dict(e) for e in d.get("existents", ())),
            events=tuple(EventEdge.from_dict(e) for e in d.get("events", ())),
        )


# ---------------------------------------------------------------------------
# knowledge


@dataclass(frozen=True, order=True)
class KBEdge:
    start: ConceptId
    relation: str
    end: ConceptId
    weight: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"start": self.start, "relation": self.relation, "end": self.end, "weight": self.weight}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> KBEdge:
        return cls(d["start"], d["relation"], d["end"], float(d["weight"]))


@dataclass(frozen=True, order=True)
class PathStep:
    """One edge of a KB path. ``inverse`` means it was walked end -> start."""

    edge: KBEdge
    inverse: bool = False

    @property
    def source(self) -> ConceptId:
        return self.edge.end if self.inverse else self.edge.start

    @property
    def target(self) -> ConceptId:
        return self.edge.start if self.inverse else self.edge.end

    def to_dict(self) -> dict[str, Any]:
        return {**self.edge.to_dict(), "inverse": self.inverse}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PathStep:
        return cls(KBEdge.from_dict(d), bool(d.get("inverse", False)))


# ---------------------------------------------------------------------------
# hypotheses


@dataclass(frozen=True)
class Evidence:
    """A scored justification.

    Exactly one provenance field is set: ``attribute`` (+ ``annotators``) for
    attribute matches, ``shared_existent`` for the same node taking part in two
    events, ``path`` for knowledge, ``premise`` for a premised hypothesis id.
    Premise evidence has score 0 here; its value depends on the accepted set.
    """

    kind: EvidenceKind
    score: float = 0.0
    attribute: str | None = None
    annotators: tuple[int, int] | None = None
    shared_existent: str | None = None
    path: tuple[PathStep, ...] | None = None
    premise: str | None = None

    @classmethod
    def observed_attribute(cls, name: str, a: int, b: int) -> Evidence:
        return cls(EvidenceKind.OBSERVATIONAL, float(min(a, b)), attribute=name, annotators=(a, b))

    @classmethod
    def exact_match(cls, node_id: str, r: float) -> Evidence:
        return cls(EvidenceKind.OBSERVATIONAL, float(r), shared_existent=node_id)

    @classmethod
    def knowledge(cls, steps: tuple[PathStep, ...], score: float) -> Evidence:
        return cls(EvidenceKind.KNOWLEDGE, float(score), path=tuple(steps))

    @classmethod
    def premised_on(cls, hypothesis_id: str) -> Evidence:
        return cls(EvidenceKind.PREMISE, 0.0, premise=hypothesis_id)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value, "score": self.score}
        if self.attribute is not None:
            d["attribute"] = self.attribute
        if self.annotators is not None:
            d["annotators"] = list(self.annotators)
        if self.shared_existent is not None:
            d["shared_existent"] = self.shared_existent
        if self.path is not None:
            d["path"] = [s.to_dict() for s in self.path]
        if self.premise is not None:
            d["premise"] = self.premise
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Evidence:
        ann = d.get("annotators")
        path = d.get("path")
        return cls(
            kind=EvidenceKind(d["kind"]),
            score=float(d["score"]),
            attribute=d.get("attribute"),
            annotators=None if ann is None else (int(ann[0]), int(ann[1])),
            shared_existent=d.get("shared_existent"),
            path=None if path is None else tuple(PathStep.from_dict(s) for s in path),
            premise=d.get("premise"),
        )


@dataclass(frozen=True)
class Hypothesis:
    id: str
    kind: HypothesisKind
    subject: str
    object: str
    evidence: tuple[Evidence, ...]
    relation: str | None = None  # affective relation name

    @property
    def own_score(self) -> float:
        """Sum of evidence that does not depend on other hypotheses."""
        return sum(e.score for e in self.evidence if e.kind is not EvidenceKind.PREMISE)

    @property
    def premises(self) -> tuple[str, ...]:
        return tuple(e.premise for e in self.evidence if e.kind is EvidenceKind.PREMISE)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "kind": self.kind.value,
            "subject": self.subject,
            "object": self.object,
            "evidence": [e.to_dict() for e in self.evidence],
        }
        if self.relation is not None:
            d["relation"] = self.relation
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Hypothesis:
        return cls(
            id=d["id"],
            kind=HypothesisKind(d["kind"]),
            subject=d["subject"],
            object=d["object"],
            evidence=tuple(Evidence.from_dict(e) for e in d["evidence"]),
            relation=d.get("relation"),
        )


@dataclass(frozen=True)
class Objectives:
    connectivity: int = 0
    density: float = 0.0
    support: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {"connectivity": self.connectivity, "density": self.density, "support": self.support}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Objectives:
        return cls(int(d["connectivity"]), float(d["density"]), float(d["support"]))


@dataclass(frozen=True)
class SolutionSet:
    accepted: frozenset[str] = frozenset()
    objectives: Objectives = field(default_factory=Objectives)
    scalar_score: float = 0.0

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.accepted))

    def to_dict(self) -> dict[str, Any]:
        return {
            "accepted": list(self.ids),
            "objectives": self.objectives.to_dict(),
            "scalar_score": self.scalar_score,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SolutionSet:
        return cls(
            frozenset(d["accepted"]),
            Objectives.from_dict(d["objectives"]),
            float(d["scalar_score"]),
        )


# ---------------------------------------------------------------------------
# validation


def validate(sequence: SceneGraphSequence) -> list[str]:
    violations: list[str] = []
    for pos, img in enumerate(sequence.images):
        if img.index != pos:
            violations.append(f"image at position {pos} has index {img.index}; indices must be contiguous from 0")
    n_images = len(sequence.images)

    ids = Counter([e.id for e in sequence.existents] + [e.id for e in sequence.events])
    for node_id, n in sorted(ids.items()):
        if n > 1:
            violations.append(f"duplicate node id {node_id!r} ({n} occurrences)")

    existents: dict[str, ExistentNode] = {}
    for ex in sequence.existents:
        existents.setdefault(ex.id, ex)
        if not 0 <= ex.image_index < n_images:
            violations.append(f"existent {ex.id!r} refers to missing image {ex.image_index}")
        seen: set[str] = set()
        for attr in ex.attributes:
            if attr.annotators < 1:
                violations.append(f"existent {ex.id!r} attribute {attr.name!r} has annotator count {attr.annotators} < 1")
            key = normalize_attribute(attr.name)
            if key in seen:
                violations.append(f"existent {ex.id!r} repeats attribute {key!r}")
            seen.add(key)

    for ev in sequence.events:
        if not 0 <= ev.image_index < n_images:
            violations.append(f"event {ev.id!r} refers to missing image {ev.image_index}")
        for role, pid in (("subject", ev.subject_id), ("object", ev.object_id)):
            if pid is None:
                continue
            target = existents.get(pid)
            if target is None:
                violations.append(f"event {ev.id!r} {role} {pid!r} is not an existent")
            elif target.image_index != ev.image_index:
                violations.append(
                    f"event {ev.id!r} (image {ev.image_index}) has {role} {pid!r} from image {target.image_index}"
                )
    return violations
