"""Sensemaking over image sequences: scene graphs + commonsense knowledge ->
hypothesized coherence relations -> a single interconnected knowledge graph."""

from .core import (
    CoherenceCategory,
    Evidence,
    EvidenceKind,
    EventEdge,
    ExistentNode,
    Hypothesis,
    HypothesisKind,
    KBEdge,
    Objectives,
    SceneGraphSequence,
    SolutionSet,
    validate,
)
from .hypeval import ObjectiveWeights, brute_force_oracle, check_feasible, effective_support, solve
from .hypgen import generate_affective, generate_causal, generate_pool, generate_referential
from .ingest import CategoryConfig, KnowledgeBase, link_concepts, load_knowledge_base, parse_scene_graphs
from .kb_query import affective_neighbors, find_paths, path_score

__version__ = "0.1.0"
