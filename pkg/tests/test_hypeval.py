import random
from itertools import combinations

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from sensemaking.core import Evidence, EventEdge, ExistentNode, Hypothesis, HypothesisKind, ImageInfo, SceneGraphSequence
from sensemaking.hypeval import (
    ObjectiveWeights,
    SolverLimitError,
    UnknownHypothesisError,
    brute_force_oracle,
    check_feasible,
    connectivity,
    density,
    effective_scores,
    effective_support,
    evaluate_set,
    identity_classes,
    objective_graph,
    solve,
)
from sensemaking.hypgen import generate_pool, referential_id

from instances import random_instance

HORSE_B = ["is(horse-1,horse-4)", "is(horse-1,horse-5)", "is(horse-4,horse-5)", "is(horse-2,horse-3)",
           "is(man-2,man-3)", "seq(riding-1,riding-3)", "seq(riding-2,riding-3)"]
HORSE_C = ["is(horse-1,horse-3)", "is(horse-1,horse-5)", "is(horse-3,horse-5)", "is(horse-2,horse-4)",
           "is(man-2,man-3)", "seq(riding-1,riding-3)", "seq(riding-2,riding-3)"]


def ref(a, b, score=1.0):
    return Hypothesis(referential_id(a, b), HypothesisKind.REFERENTIAL_IS, a, b, (Evidence.knowledge((), score),))


def seq_of(placement):
    """Existents from {id: image}."""
    n = max(placement.values()) + 1
    return SceneGraphSequence(tuple(ImageInfo(i) for i in range(n)),
                              tuple(ExistentNode(x, img, x.split("-")[0]) for x, img in sorted(placement.items())))


# identity classes -----------------------------------------------------------


def test_identity_classes_transitive():
    assert identity_classes([ref("a", "b"), ref("b", "c")]) == [frozenset("abc")]


def test_identity_classes_singletons():
    assert identity_classes([], ["x", "y"]) == [frozenset("x"), frozenset("y")]


def test_identity_classes_horse_set_b(horse):
    seq, kb = horse
    pool = {h.id: h for h in generate_pool(seq, kb)}
    classes = identity_classes([pool[i] for i in HORSE_B], [e.id for e in seq.existents])
    assert frozenset({"horse-1", "horse-4", "horse-5"}) in classes
    assert frozenset({"man-2", "man-3"}) in classes
    assert frozenset({"man-1"}) in classes


# feasibility ------------------------------------------------------------------


def test_c2_violation():
    seq = seq_of({"a": 0, "b": 1, "c": 2})
    pool = [ref("a", "c"), ref("b", "c"), ref("a", "b")]
    (v,) = check_feasible(["is(a,c)", "is(b,c)"], pool, seq)
    assert v.constraint == "c2" and v.members == ("a", "b")
    assert check_feasible(["is(a,c)", "is(b,c)", "is(a,b)"], pool, seq) == []


def test_c1_violation():
    seq = seq_of({"a": 0, "b": 0, "c": 1})
    pool = [ref("a", "c"), ref("b", "c")]
    (v,) = check_feasible(["is(a,c)", "is(b,c)"], pool, seq)
    assert v.constraint == "c1" and v.members == ("a", "b")


def test_empty_set_feasible_and_unknown_id():
    seq = seq_of({"a": 0, "b": 1})
    assert check_feasible([], [ref("a", "b")], seq) == []
    with pytest.raises(UnknownHypothesisError):
        check_feasible(["is(a,zz)"], [ref("a", "b")], seq)


def test_zero_score_hypothesis_is_infeasible():
    seq = seq_of({"a": 0, "b": 1})
    pool = [ref("a", "b"), Hypothesis("seq(x,y)", HypothesisKind.CAUSAL_SEQUENCE, "x", "y", (Evidence.premised_on("is(a,b)"),))]
    (v,) = check_feasible(["seq(x,y)"], pool, seq)
    assert v.constraint == "zero_support"
    assert check_feasible(["seq(x,y)", "is(a,b)"], pool, seq) == []


# support ------------------------------------------------------------------------


def test_horse_supports(horse):
    seq, kb = horse
    pool = generate_pool(seq, kb)
    assert effective_support(HORSE_C, pool) == 13
    assert effective_support(HORSE_B, pool) == 12


def test_rejected_premise_leaves_path_score(frisbee):
    seq, kb = frisbee
    pool = generate_pool(seq, kb)
    assert effective_support(["seq(throwing-2,catching-3)"], pool) == pytest.approx(1.915, abs=1e-12)


def test_effective_scores_itemized(horse):
    seq, kb = horse
    pool = generate_pool(seq, kb)
    s = effective_scores(HORSE_C, pool)
    assert s["seq(riding-1,riding-3)"] == 2  # 1 + horse-3/horse-5 (no colour match)
    assert s["seq(riding-2,riding-3)"] == 3  # 1 + man-2/man-3 (red)
    s = effective_scores(HORSE_B, pool)
    assert s["seq(riding-1,riding-3)"] == 1
    assert s["seq(riding-2,riding-3)"] == 4


# graph measures ------------------------------------------------------------------


def brute_force_connectivity(g):
    n = g.number_of_nodes()
    if n < 2 or not nx.is_connected(g):
        return 0
    nodes = list(g.nodes)
    for k in range(n - 1):
        for cut in combinations(nodes, k):
            rest = g.subgraph(set(nodes) - set(cut))
            if rest.number_of_nodes() >= 2 and not nx.is_connected(rest):
                return k
    return n - 1


def test_connectivity_examples():
    assert connectivity(nx.path_graph(3)) == 1
    assert connectivity(nx.empty_graph(2)) == 0
    assert connectivity(nx.complete_graph(4)) == 3
    assert connectivity(nx.empty_graph(1)) == 0
    assert connectivity(nx.cycle_graph(5)) == 2


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 8), st.floats(0, 1), st.integers(0, 10_000))
def test_connectivity_matches_brute_force(n, p, seed):
    g = nx.gnp_random_graph(n, p, seed=seed)
    k = connectivity(g)
    assert k == brute_force_connectivity(g)
    assert 0 <= k <= max(0, n - 1)


def test_density_examples():
    assert density(nx.complete_graph(4)) == 1.0
    assert density(nx.path_graph(4)) == 0.5
    assert density(nx.empty_graph(1)) == 0


@settings(max_examples=100)
@given(st.integers(0, 10), st.floats(0, 1), st.integers(0, 10_000))
def test_density_in_unit_interval(n, p, seed):
    d = density(nx.gnp_random_graph(n, p, seed=seed))
    assert 0 <= d <= 1


def test_objective_graph(frisbee):
    seq, kb = frisbee
    pool = generate_pool(seq, kb)
    bare = objective_graph(seq)
    assert bare.number_of_nodes() == 13 and bare.number_of_edges() == 7
    one = objective_graph(seq, ["is(grass-1,grass-2)"], pool)
    assert set(one.edges) - set(bare.edges) == {("grass-1", "grass-2")}
    aff = objective_graph(seq, ["aff(woman-2,CausesDesire,wash_hands)"], pool)
    assert aff.has_edge("woman-2", "concept:wash_hands")
    assert aff.number_of_nodes() == 14


def test_evaluator_matches_graph_functions(frisbee):
    seq, kb = frisbee
    pool = generate_pool(seq, kb)
    ids = [h.id for h in pool]
    rng = random.Random(1)
    for _ in range(30):
        subset = [i for i in ids if rng.random() < 0.5]
        sol = evaluate_set(subset, pool, seq)
        g = objective_graph(seq, subset, pool)
        assert sol.objectives.connectivity == connectivity(g)
        assert sol.objectives.density == pytest.approx(density(g), abs=1e-12)


# solver --------------------------------------------------------------------------


def test_weights_validation():
    with pytest.raises(ValueError):
        ObjectiveWeights(0, 0, 0)
    with pytest.raises(ValueError):
        ObjectiveWeights(-1, 1, 1)
    assert ObjectiveWeights.parse("1, 0,2") == ObjectiveWeights(1, 0, 2)


@pytest.mark.parametrize("strategy", ["exhaustive", "local_search"])
def test_horse_prefers_set_c(horse, strategy):
    seq, kb = horse
    pool = generate_pool(seq, kb)
    sol = solve(pool, seq, strategy=strategy)
    assert sorted(sol.accepted) == sorted(HORSE_C)
    assert sol.objectives.support == 13


def test_empty_pool(frisbee):
    seq, _ = frisbee
    sol = solve([], seq)
    g = objective_graph(seq)
    assert sol.accepted == frozenset()
    assert (sol.objectives.connectivity, sol.objectives.density, sol.objectives.support) == (connectivity(g), density(g), 0)


def test_oracle_single_and_conflicting():
    seq = seq_of({"a": 0, "b": 1})
    assert brute_force_oracle([ref("a", "b")], seq).accepted == {"is(a,b)"}
    seq = seq_of({"a": 0, "b": 0, "c": 1})
    pool = [ref("a", "c", 1.0), ref("b", "c", 2.0)]
    sol = brute_force_oracle(pool, seq)
    assert sol.accepted == {"is(b,c)"}
    assert solve(pool, seq, strategy="exhaustive") == sol


def test_oracle_and_exhaustive_limits():
    seq = seq_of({f"x-{i}": i % 2 for i in range(12)})
    pool = [ref(f"x-{i}", f"x-{j}") for i in range(0, 12, 2) for j in range(1, 12, 2)]
    assert len(pool) > 20
    with pytest.raises(SolverLimitError):
        brute_force_oracle(pool, seq)
    with pytest.raises(SolverLimitError):
        solve(pool, seq, strategy="exhaustive")
    sol = solve(pool, seq, strategy="local_search")
    assert check_feasible(sol.accepted, pool, seq) == []


def test_frisbee_solvers_agree_with_oracle(frisbee):
    seq, kb = frisbee
    pool = generate_pool(seq, kb)
    oracle = brute_force_oracle(pool, seq)
    assert solve(pool, seq, strategy="exhaustive") == oracle
    assert solve(pool, seq, strategy="local_search") == oracle


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_local_search_no_worse_than_plain_hill_climb(seed):
    seq, kb, pool = random_instance(random.Random(seed), max_hypotheses=25)
    full = solve(pool, seq, strategy="local_search")
    empty_only = solve(pool, seq, strategy="local_search", restarts=0)
    assert full.scalar_score >= empty_only.scalar_score


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([(1, 1, 1), (0, 0, 1), (1, 0, 0), (0, 1, 0), (2, 1, 0.5)]))
def test_exhaustive_equals_oracle_under_weights(seed, w):
    seq, kb, pool = random_instance(random.Random(seed), max_hypotheses=10)
    weights = ObjectiveWeights(*w)
    assert solve(pool, seq, weights, strategy="exhaustive") == brute_force_oracle(pool, seq, weights)


def test_worker_count_does_not_change_result(horse):
    seq, kb = horse
    pool = generate_pool(seq, kb)
    for strategy in ("exhaustive", "local_search"):
        assert solve(pool, seq, strategy=strategy, workers=1) == solve(pool, seq, strategy=strategy, workers=4)


def test_unknown_strategy(horse):
    seq, kb = horse
    with pytest.raises(ValueError):
        solve(generate_pool(seq, kb), seq, strategy="annealing")
