import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from sensemaking.core import CoherenceCategory, KBEdge, PathStep
from sensemaking.ingest import CategoryConfig, KnowledgeBase, load_knowledge_base
from sensemaking.kb_query import KBPath, affective_neighbors, find_paths, path_score

CAUSAL = CoherenceCategory.CAUSAL


def brute_force_paths(edges, category, config, src, dst, max_len):
    """Every orientation of every edge sequence, filtered to chained simple paths."""
    if src == dst:
        return {()}
    usable = [e for e in edges if config.category(e.relation) is category and e.start != e.end]
    oriented = [PathStep(e, inv) for e in usable for inv in (False, True)]
    out = set()
    for n in range(1, max_len + 1):
        for seq in itertools.product(oriented, repeat=n):
            nodes = [seq[0].source] + [s.target for s in seq]
            if nodes[0] != src or nodes[-1] != dst:
                continue
            if any(a.target != b.source for a, b in zip(seq, seq[1:])):
                continue
            if len(set(nodes)) != len(nodes):
                continue
            out.add(tuple(seq))
    return out


def test_throw_to_catch_via_play_frisbee(frisbee):
    _, kb = frisbee
    paths = find_paths(kb, "throwing", "catching", CAUSAL, 3)
    assert len(paths) == 1
    (path,) = paths
    assert path.concepts == ("throwing", "play_frisbee", "catching")
    assert [s.edge.relation for s in path.steps] == ["HasSubevent", "HasSubevent"]
    assert [s.inverse for s in path.steps] == [True, False]


def test_zero_length_path(frisbee):
    _, kb = frisbee
    assert find_paths(kb, "playing", "playing", CAUSAL) == [KBPath((), CAUSAL)]


def test_disconnected_and_unknown(frisbee):
    _, kb = frisbee
    assert find_paths(kb, "throwing", "grass", CAUSAL) == []
    assert find_paths(kb, "throwing", "nope", CAUSAL) == []
    with pytest.raises(ValueError):
        find_paths(kb, "throwing", "catching", CAUSAL, 0)


def test_max_len_caps_paths():
    kb = load_knowledge_base("a\tCauses\tb\t1\nb\tCauses\tc\t1\nc\tCauses\td\t1\nd\tCauses\te\t1\n")
    assert [len(p) for p in find_paths(kb, "a", "d", CAUSAL, 3)] == [3]
    assert find_paths(kb, "a", "e", CAUSAL, 3) == []
    assert [len(p) for p in find_paths(kb, "a", "e", CAUSAL, 4)] == [4]


def test_other_categories_not_traversed():
    kb = load_knowledge_base("a\tCauses\tb\t1\nb\tDesires\tc\t1\n")
    assert find_paths(kb, "a", "c", CAUSAL) == []
    assert len(find_paths(kb, "b", "c", CoherenceCategory.AFFECTIVE)) == 1


def test_order_shortest_first():
    kb = load_knowledge_base("a\tCauses\tz\t1\na\tCauses\tm\t1\nm\tCauses\tz\t1\na\tHasSubevent\tz\t1\n")
    paths = find_paths(kb, "a", "z", CAUSAL)
    assert [len(p) for p in paths] == [1, 1, 2]
    assert [p.steps[0].edge.relation for p in paths[:2]] == ["Causes", "HasSubevent"]


@st.composite
def small_kbs(draw):
    n = draw(st.integers(2, 12))
    nodes = [f"n{i}" for i in range(n)]
    rels = ["Causes", "HasSubevent", "Desires", "RelatedTo"]
    edges = draw(st.lists(
        st.builds(KBEdge, st.sampled_from(nodes), st.sampled_from(rels), st.sampled_from(nodes),
                  st.sampled_from([0.0, 0.5, 1.0, 2.0])),
        max_size=14))
    return nodes, edges


@settings(max_examples=150, deadline=None)
@given(small_kbs(), st.integers(0, 11), st.integers(0, 11), st.integers(1, 3))
def test_find_paths_matches_brute_force(kb_case, i, j, max_len):
    nodes, edges = kb_case
    src, dst = nodes[i % len(nodes)], nodes[j % len(nodes)]
    config = CategoryConfig()
    kb = KnowledgeBase(edges, config, concepts=nodes)
    got = find_paths(kb, src, dst, CAUSAL, max_len)
    # duplicates (same start/relation/end) collapse to one edge in the KB
    expected = brute_force_paths(kb.edges, CAUSAL, config, src, dst, max_len)
    assert {p.steps for p in got} == expected
    assert len(got) == len(expected)
    assert [p.sort_key() for p in got] == sorted(p.sort_key() for p in got)
    for p in got:
        assert all(config.category(s.edge.relation) is CAUSAL for s in p.steps)


@settings(max_examples=60, deadline=None)
@given(small_kbs(), st.integers(0, 11), st.integers(0, 11), st.randoms(use_true_random=False))
def test_find_paths_independent_of_insertion_order(kb_case, i, j, rnd):
    nodes, edges = kb_case
    src, dst = nodes[i % len(nodes)], nodes[j % len(nodes)]
    shuffled = list(edges)
    rnd.shuffle(shuffled)
    a = KnowledgeBase(edges, CategoryConfig(), concepts=nodes)
    b = KnowledgeBase(shuffled, CategoryConfig(), concepts=list(reversed(nodes)))
    assert find_paths(a, src, dst, CAUSAL) == find_paths(b, src, dst, CAUSAL)


def _path(*weights):
    steps = tuple(PathStep(KBEdge(f"c{k}", "Causes", f"c{k + 1}", w)) for k, w in enumerate(weights))
    return KBPath(steps, CAUSAL)


def test_path_score_examples():
    assert path_score(KBPath((), CAUSAL)) == 1.0
    assert path_score(_path(1.915, 1.915)) == pytest.approx(1.915, abs=1e-12)
    assert path_score(_path(2.0, 0.0)) == 1.0


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=5))
def test_path_score_between_min_and_max(weights):
    s = path_score(_path(*weights))
    assert min(weights) - 1e-9 <= s <= max(weights) + 1e-9


def test_affective_neighbors(frisbee):
    _, kb = frisbee
    assert affective_neighbors(kb, "playing") == [
        ("CausesDesire", "wash_hands", 1.0),
        ("MotivatedByGoal", "playing_pretend", 1.0),
    ]
    assert affective_neighbors(kb, "throwing") == []
    assert affective_neighbors(kb, None) == []
    assert affective_neighbors(kb, "zxqv") == []


def test_affective_neighbors_one_hop_outgoing_only():
    kb = load_knowledge_base("play\tCausesDesire\trest\t2\nrest\tDesires\tsleep\t1\nwork\tCausesDesire\tplay\t1\n")
    assert affective_neighbors(kb, "play") == [("CausesDesire", "rest", 2.0)]
