"""Input parsing: scene graphs (canonical JSON, Visual Genome) and knowledge bases
(canonical TSV, ConceptNet assertion CSV), plus concept linking."""
from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

from .core import (
    Attribute,
    CoherenceCategory,
    ConceptId,
    EventEdge,
    ExistentNode,
    ImageInfo,
    KBEdge,
    PathStep,
    SceneGraphSequence,
    validate,
)

_WS = re.compile(r"\s+")

CONCEPTNET_RELATIONS = (
    "Antonym", "AtLocation", "CapableOf", "Causes", "CausesDesire", "CreatedBy",
    "DefinedAs", "DerivedFrom", "Desires", "DistinctFrom", "Entails",
    "EtymologicallyDerivedFrom", "EtymologicallyRelatedTo", "ExternalURL", "FormOf",
    "HasA", "HasContext", "HasFirstSubevent", "HasLastSubevent", "HasPrerequisite",
    "HasProperty", "HasSubevent", "InstanceOf", "IsA", "LocatedNear", "MadeOf",
    "MannerOf", "MotivatedByGoal", "NotCapableOf", "NotDesires", "NotHasProperty",
    "NotUsedFor", "ObstructedBy", "PartOf", "ReceivesAction", "RelatedTo",
    "SimilarTo", "SymbolOf", "Synonym", "UsedFor",
    "dbpedia/capital", "dbpedia/field", "dbpedia/genre", "dbpedia/genus",
    "dbpedia/influencedBy", "dbpedia/knownFor", "dbpedia/language", "dbpedia/leader",
    "dbpedia/occupation", "dbpedia/product",
)

_DEFAULT_ACTIVE = {
    "Causes": CoherenceCategory.CAUSAL,
    "HasSubevent": CoherenceCategory.CAUSAL,
    "HasFirstSubevent": CoherenceCategory.CAUSAL,
    "HasLastSubevent": CoherenceCategory.CAUSAL,
    "HasPrerequisite": CoherenceCategory.CAUSAL,
    "MotivatedByGoal": CoherenceCategory.AFFECTIVE,
    "CausesDesire": CoherenceCategory.AFFECTIVE,
    "Desires": CoherenceCategory.AFFECTIVE,
    "Synonym": CoherenceCategory.REFERENTIAL,
    "FormOf": CoherenceCategory.REFERENTIAL,
}

DEFAULT_RELATIONS: dict[str, CoherenceCategory] = {
    rel: _DEFAULT_ACTIVE.get(rel, CoherenceCategory.IGNORED) for rel in CONCEPTNET_RELATIONS
}

DEFAULT_CHARACTERS = ("person", "animal", "man", "woman", "dog", "horse")

TAXONOMY_RELATION = "IsA"


class IngestError(ValueError):
    """Base for all input errors."""


class ParseError(IngestError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class SemanticError(IngestError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid scene graph sequence:\n  " + "\n  ".join(violations))


def concept_key(label: str) -> str:
    """Normalized concept label: lowercase, trimmed, whitespace runs -> '_'."""
    return _WS.sub("_", label.strip().lower())


@dataclass(frozen=True)
class CategoryConfig:
    relations: Mapping[str, CoherenceCategory] = field(default_factory=lambda: dict(DEFAULT_RELATIONS))
    character_concepts: tuple[ConceptId, ...] = DEFAULT_CHARACTERS
    ignore_unknown_relations: bool = False

    def category(self, relation: str) -> CoherenceCategory | None:
        return self.relations.get(relation)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> CategoryConfig:
        relations = dict(DEFAULT_RELATIONS)
        for name, cat in d.get("relations", {}).items():
            try:
                relations[name] = CoherenceCategory(str(cat).lower())
            except ValueError:
                raise IngestError(f"relation {name!r}: unknown coherence category {cat!r}") from None
        chars = d.get("character_concepts")
        return cls(
            relations=relations,
            character_concepts=DEFAULT_CHARACTERS if chars is None else tuple(concept_key(c) for c in chars),
            ignore_unknown_relations=bool(d.get("ignore_unknown_relations", False)),
        )

    @classmethod
    def from_json(cls, text: str | bytes) -> CategoryConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, e.lineno, e.colno) from None
        if not isinstance(data, dict):
            raise ParseError("category config must be a JSON object")
        return cls.from_dict(data)


class KnowledgeBase:
    """Weighted concept graph with edges grouped by coherence category.

    Ignored relations are not kept as edges, but every concept mentioned in the
    input is part of the vocabulary, and IsA edges are kept separately for
    character detection.
    """

    def __init__(self, edges: Iterable[KBEdge], config: CategoryConfig,
                 concepts: Iterable[ConceptId] = (), taxonomy: Iterable[tuple[ConceptId, ConceptId]] = ()):
        self.config = config
        best: dict[tuple[str, str, str], float] = {}
        for e in edges:
            if e.weight < 0:
                raise IngestError(f"negative weight on edge {e}")
            key = (e.start, e.relation, e.end)
            best[key] = max(best.get(key, e.weight), e.weight)
        self.edges: tuple[KBEdge, ...] = tuple(KBEdge(s, r, t, w) for (s, r, t), w in sorted(best.items()))

        vocab = set(concepts)
        self._adjacency: dict[CoherenceCategory, dict[ConceptId, list[PathStep]]] = defaultdict(lambda: defaultdict(list))
        self._outgoing: dict[CoherenceCategory, dict[ConceptId, list[KBEdge]]] = defaultdict(lambda: defaultdict(list))
        for e in self.edges:
            cat = config.category(e.relation) or CoherenceCategory.IGNORED
            vocab.update((e.start, e.end))
            self._outgoing[cat][e.start].append(e)
            if e.start == e.end:
                continue
            self._adjacency[cat][e.start].append(PathStep(e, False))
            self._adjacency[cat][e.end].append(PathStep(e, True))
        for per_concept in self._adjacency.values():
            for steps in per_concept.values():
                steps.sort(key=_step_key)

        self._isa: dict[ConceptId, set[ConceptId]] = defaultdict(set)
        for child, parent in taxonomy:
            self._isa[child].add(parent)
            vocab.update((child, parent))
        self.concepts: frozenset[ConceptId] = frozenset(vocab)

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, concept: object) -> bool:
        return concept in self.concepts

    def category(self, relation: str) -> CoherenceCategory:
        return self.config.category(relation) or CoherenceCategory.IGNORED

    def lookup(self, label: str) -> ConceptId | None:
        key = concept_key(label)
        return key if key in self.concepts else None

    def steps_from(self, concept: ConceptId, category: CoherenceCategory) -> list[PathStep]:
        """Edges of ``category`` touching ``concept``, oriented away from it."""
        return self._adjacency.get(category, {}).get(concept, [])

    def outgoing(self, concept: ConceptId, category: CoherenceCategory) -> list[KBEdge]:
        return self._outgoing.get(category, {}).get(concept, [])

    def is_character(self, concept: ConceptId | None, max_hops: int = 2) -> bool:
        if concept is None:
            return False
        roots = set(self.config.character_concepts)
        frontier = {concept}
        seen = set(frontier)
        for _ in range(max_hops + 1):
            if frontier & roots:
                return True
            frontier = {p for c in frontier for p in self._isa.get(c, ()) if p not in seen}
            seen |= frontier
        return False

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return (self.edges == other.edges and self.concepts == other.concepts
                and dict(self._isa) == dict(other._isa))

    __hash__ = None  # type: ignore[assignment]


def _step_key(step: PathStep) -> tuple:
    e = step.edge
    return (step.target, e.relation, e.start, e.end, step.inverse, e.weight)


# ---------------------------------------------------------------------------
# knowledge base loading


def _resolve_relation(relation: str, start: str, end: str) -> tuple[str, str, str]:
    """Turn ``INV_X`` / ``X-inverse`` notations into a forward edge."""
    if relation.startswith("INV_"):
        return relation[4:], end, start
    if relation.endswith("-inverse"):
        return relation[: -len("-inverse")], end, start
    return relation, start, end


def _build_kb(rows: Iterable[tuple[int, str, str, str, float]], config: CategoryConfig) -> KnowledgeBase:
    edges: list[KBEdge] = []
    concepts: set[str] = set()
    taxonomy: list[tuple[str, str]] = []
    for lineno, start, relation, end, weight in rows:
        relation, start, end = _resolve_relation(relation, concept_key(start), concept_key(end))
        if not start or not end:
            raise ParseError("empty concept", lineno)
        if weight < 0 or weight != weight:
            raise ParseError(f"weight must be a non-negative number, got {weight!r}", lineno)
        concepts.update((start, end))
        if relation == TAXONOMY_RELATION:
            taxonomy.append((start, end))
        cat = config.category(relation)
        if cat is None:
            if config.ignore_unknown_relations:
                continue
            raise ParseError(f"unknown relation {relation!r}", lineno)
        if cat is CoherenceCategory.IGNORED:
            continue
        edges.append(KBEdge(start, relation, end, weight))
    return KnowledgeBase(edges, config, concepts, taxonomy)


def _text(data: str | bytes) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"input is not UTF-8: {e}") from None
    return data


def _tsv_rows(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.rstrip("\r\n").split("\t")
        if len(parts) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(parts)}", lineno)
        start, relation, end, weight = (p.strip() for p in parts)
        try:
            w = float(weight)
        except ValueError:
            raise ParseError(f"bad weight {weight!r}", lineno) from None
        yield lineno, start, relation, end, w


_CN_CONCEPT = re.compile(r"^/c/([^/]+)/([^/]+)")


def _conceptnet_rows(text: str, language: str):
    reader = csv.reader(io.StringIO(text), delimiter="\t", quoting=csv.QUOTE_NONE)
    for lineno, parts in enumerate(reader, start=1):
        if not parts or (len(parts) == 1 and not parts[0].strip()) or parts[0].startswith("#"):
            continue
        if len(parts) == 5:
            parts = parts[1:]
        if len(parts) != 4:
            raise ParseError(f"expected 4 or 5 tab-separated fields, got {len(parts)}", lineno)
        rel_uri, start_uri, end_uri, meta = parts
        if not rel_uri.startswith("/r/"):
            raise ParseError(f"bad relation URI {rel_uri!r}", lineno)
        ms, me = _CN_CONCEPT.match(start_uri), _CN_CONCEPT.match(end_uri)
        if ms is None or me is None:
            raise ParseError(f"bad concept URI in {start_uri!r} / {end_uri!r}", lineno)
        if ms.group(1) != language or me.group(1) != language:
            continue
        try:
            weight = float(json.loads(meta).get("weight", 1.0))
        except (json.JSONDecodeError, AttributeError, TypeError, ValueError):
            raise ParseError("metadata column is not a JSON object with a numeric weight", lineno) from None
        yield lineno, ms.group(2), rel_uri[3:], me.group(2), weight


def load_knowledge_base(data: str | bytes, format: str = "canonical_tsv",
                        config: CategoryConfig | None = None, language: str = "en") -> KnowledgeBase:
    config = config or CategoryConfig()
    text = _text(data)
    fmt = format.replace("-", "_").lower()
    if fmt in ("canonical_tsv", "tsv", "canonical"):
        rows = _tsv_rows(text)
    elif fmt in ("conceptnet_dump", "conceptnet"):
        rows = _conceptnet_rows(text, language)
    else:
        raise IngestError(f"unknown knowledge base format {format!r}")
    return _build_kb(rows, config)


def dump_knowledge_base(kb: KnowledgeBase) -> str:
    lines = [f"{e.start}\t{e.relation}\t{e.end}\t{e.weight!r}" for e in kb.edges]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# scene graphs


def _require(d: Any, key: str, where: str) -> Any:
    if not isinstance(d, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in d:
        raise ParseError(f"{where}: missing {key!r}")
    return d[key]


def _load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None


def _parse_canonical(doc: Any) -> SceneGraphSequence:
    images_doc = _require(doc, "images", "document")
    if not isinstance(images_doc, list):
        raise ParseError("'images' must be a list")
    images, existents, events = [], [], []
    for pos, img in enumerate(images_doc):
        where = f"images[{pos}]"
        if not isinstance(img, dict):
            raise ParseError(f"{where}: expected an object")
        index = int(img.get("index", pos))
        images.append(ImageInfo(index, None if img.get("source") is None else str(img["source"])))
        for k, ex in enumerate(img.get("existents", [])):
            w = f"{where}.existents[{k}]"
            attrs = []
            for j, a in enumerate(ex.get("attributes", []) if isinstance(ex, dict) else []):
                if isinstance(a, str):
                    attrs.append(Attribute(a, 1))
                else:
                    attrs.append(Attribute(str(_require(a, "name", f"{w}.attributes[{j}]")), int(a.get("annotators", 1))))
            existents.append(ExistentNode(
                id=str(_require(ex, "id", w)),
                image_index=index,
                label=str(_require(ex, "label", w)),
                attributes=tuple(attrs),
                concept=ex.get("concept"),
            ))
        for k, ev in enumerate(img.get("events", [])):
            w = f"{where}.events[{k}]"
            obj = ev.get("object") if isinstance(ev, dict) else None
            events.append(EventEdge(
                id=str(_require(ev, "id", w)),
                image_index=index,
                predicate=str(_require(ev, "predicate", w)),
                subject_id=str(_require(ev, "subject", w)),
                object_id=None if obj is None else str(obj),
                concept=ev.get("concept"),
            ))
    return SceneGraphSequence(tuple(images), tuple(existents), tuple(events))


def _vg_name(obj: dict[str, Any]) -> str:
    names = obj.get("names")
    if names:
        return str(names[0])
    if obj.get("name"):
        return str(obj["name"])
    raise ParseError(f"object {obj.get('object_id')!r} has no name")


def _vg_slug(text: str) -> str:
    return concept_key(text) or "node"


def _parse_visual_genome(doc: Any) -> SceneGraphSequence:
    records = doc.get("images") if isinstance(doc, dict) else doc
    if not isinstance(records, list):
        raise ParseError("expected a list of Visual Genome image records")
    images, existents, events = [], [], []
    for index, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise ParseError(f"record {index}: expected an object")
        images.append(ImageInfo(index, None if rec.get("image_id") is None else str(rec["image_id"])))

        objects: dict[Any, dict[str, Any]] = {}
        counts: dict[Any, Counter] = defaultdict(Counter)

        def add_object(obj: Any, where: str) -> Any:
            oid = _require(obj, "object_id", where)
            if oid not in objects:
                objects[oid] = obj
            for a in obj.get("attributes") or ():
                counts[oid][a] += 1
            return oid

        for k, obj in enumerate(rec.get("objects", [])):
            add_object(obj, f"record {index} objects[{k}]")
        # attributes.json layout: a separate list of annotated objects
        for k, obj in enumerate(rec.get("attributes", []) if isinstance(rec.get("attributes"), list) else []):
            oid = _require(obj, "object_id", f"record {index} attributes[{k}]")
            objects.setdefault(oid, obj)
            for a in obj.get("attributes") or ():
                counts[oid][a] += 1

        rels: list[tuple[int, dict[str, Any], Any, Any]] = []
        for k, rel in enumerate(rec.get("relationships", [])):
            where = f"record {index} relationships[{k}]"
            ends = []
            for role in ("subject", "object"):
                if isinstance(rel.get(role), dict):
                    sub = rel[role]
                    oid = _require(sub, "object_id", f"{where}.{role}")
                    if oid not in objects:
                        # embedded copies of listed objects must not be counted twice
                        add_object(sub, f"{where}.{role}")
                    ends.append(oid)
                else:
                    ends.append(rel.get(f"{role}_id"))
            if ends[0] is None:
                raise ParseError(f"{where}: missing subject")
            rels.append((k, rel, ends[0], ends[1]))

        node_ids: dict[Any, str] = {}
        for oid, obj in objects.items():
            label = _vg_name(obj)
            node_ids[oid] = f"{_vg_slug(label)}-{oid}"
            merged: dict[str, int] = {}
            for name, n in counts[oid].items():
                key = " ".join(str(name).strip().lower().split())
                merged[key] = merged.get(key, 0) + n
            existents.append(ExistentNode(
                id=node_ids[oid],
                image_index=index,
                label=label.strip(),
                attributes=tuple(Attribute(n, max(1, c)) for n, c in sorted(merged.items())),
            ))
        for k, rel, sid, oid in rels:
            predicate = str(rel.get("predicate", "")).strip()
            rid = rel.get("relationship_id", f"{index}-{k}")
            for end in (sid, oid):
                if end is not None and end not in node_ids:
                    raise ParseError(f"record {index} relationship {rid!r} references unknown object {end!r}")
            events.append(EventEdge(
                id=f"{_vg_slug(predicate)}-{rid}",
                image_index=index,
                predicate=predicate,
                subject_id=node_ids[sid],
                object_id=None if oid is None else node_ids[oid],
            ))
    return SceneGraphSequence(tuple(images), tuple(existents), tuple(events))


def parse_scene_graphs(data: str | bytes, format: str = "canonical") -> SceneGraphSequence:
    doc = _load_json(_text(data))
    fmt = format.replace("-", "_").lower()
    if fmt == "canonical":
        seq = _parse_canonical(doc)
    elif fmt == "visual_genome":
        seq = _parse_visual_genome(doc)
    else:
        raise IngestError(f"unknown scene graph format {format!r}")
    violations = validate(seq)
    if violations:
        raise SemanticError(violations)
    return seq


def dump_scene_graphs(sequence: SceneGraphSequence) -> str:
    """Serialize to the canonical JSON layout (inverse of ``parse_scene_graphs``)."""
    images = []
    for img in sequence.images:
        d: dict[str, Any] = {"index": img.index}
        if img.source is not None:
            d["source"] = img.source
        d["existents"] = []
        d["events"] = []
        images.append(d)
    for ex in sequence.existents:
        d = {"id": ex.id, "label": ex.label,
             "attributes": [{"name": a.name, "annotators": a.annotators} for a in ex.attributes]}
        if ex.concept is not None:
            d["concept"] = ex.concept
        images[ex.image_index]["existents"].append(d)
    for ev in sequence.events:
        d = {"id": ev.id, "predicate": ev.predicate, "subject": ev.subject_id}
        if ev.object_id is not None:
            d["object"] = ev.object_id
        if ev.concept is not None:
            d["concept"] = ev.concept
        images[ev.image_index]["events"].append(d)
    return json.dumps({"images": images}, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# linking


def link_label(label: str, kb: KnowledgeBase) -> ConceptId | None:
    key = concept_key(label)
    if not key:
        return None
    if key in kb.concepts:
        return key
    if key.endswith("s") and key[:-1] in kb.concepts:
        return key[:-1]
    return None


def link_concepts(sequence: SceneGraphSequence, kb: KnowledgeBase) -> SceneGraphSequence:
    """Attach KB concepts to existents (by label) and events (by predicate).

    Nodes that already carry a concept present in the KB keep it, which makes
    the operation idempotent.
    """

    def resolve(current: ConceptId | None, surface: str) -> ConceptId | None:
        if current is not None and current in kb.concepts:
            return current
        return link_label(surface, kb)

    existents = tuple(replace(ex, concept=resolve(ex.concept, ex.label)) for ex in sequence.existents)
    events = tuple(replace(ev, concept=resolve(ev.concept, ev.predicate)) for ev in sequence.events)
    return SceneGraphSequence(sequence.images, existents, events)
