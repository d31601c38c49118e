"""Hypothesis-set evaluation: feasibility, objectives and the set search.

A hypothesis set is feasible when

* c1: no identity class holds two existents of the same image,
* c2: every cross-image pair inside an identity class has its own *is*
  hypothesis in the set,
* every accepted hypothesis has a positive effective score.

The search maximizes a weighted sum of normalized connectivity, density and
support, with ties broken by support, density, connectivity and finally the
sorted id list (smallest wins).
"""
from __future__ import annotations

import math
import random
from collections import defaultdict, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .core import Hypothesis, HypothesisKind, Objectives, SceneGraphSequence, SolutionSet

EXHAUSTIVE_LIMIT = 20
ORACLE_LIMIT = 20
LOCAL_SEARCH_RESTARTS = 5
DEFAULT_SEED = 0

Pool = Mapping[str, Hypothesis] | Iterable[Hypothesis]


class UnknownHypothesisError(KeyError):
    pass


class SolverLimitError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveWeights:
    connectivity: float = 1.0
    density: float = 1.0
    support: float = 1.0

    def __post_init__(self):
        values = (self.connectivity, self.density, self.support)
        if any(w < 0 or math.isnan(w) for w in values):
            raise ValueError(f"objective weights must be non-negative, got {values}")
        if not any(values):
            raise ValueError("at least one objective weight must be positive")

    @classmethod
    def parse(cls, text: str) -> ObjectiveWeights:
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated weights, got {text!r}")
        return cls(*(float(p) for p in parts))


@dataclass(frozen=True)
class Violation:
    constraint: str  # "c1", "c2" or "zero_support"
    members: tuple[str, ...]
    message: str


def as_index(pool: Pool) -> dict[str, Hypothesis]:
    if isinstance(pool, dict):
        return pool
    if isinstance(pool, Mapping):
        return dict(pool)
    index: dict[str, Hypothesis] = {}
    for h in pool:
        if h.id in index:
            raise ValueError(f"duplicate hypothesis id {h.id!r} in pool")
        index[h.id] = h
    return index


def _lookup(ids: Iterable[str], index: Mapping[str, Hypothesis]) -> list[Hypothesis]:
    out = []
    for i in sorted(set(ids)):
        if i not in index:
            raise UnknownHypothesisError(i)
        out.append(index[i])
    return out


# ---------------------------------------------------------------------------
# identity classes and feasibility


def identity_classes(accepted: Iterable[Hypothesis], existents: Iterable[str] = ()) -> list[frozenset[str]]:
    """Transitive closure of accepted *is* hypotheses (union-find).

    Existents listed in ``existents`` but untouched by any hypothesis come back
    as singletons. Classes are ordered by their smallest member.
    """
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x in existents:
        find(x)
    for h in accepted:
        if h.kind is not HypothesisKind.REFERENTIAL_IS:
            continue
        ra, rb = find(h.subject), find(h.object)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    groups: dict[str, set[str]] = defaultdict(set)
    for x in list(parent):
        groups[find(x)].add(x)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def _image_of(sequence: SceneGraphSequence) -> dict[str, int]:
    return {e.id: e.image_index for e in sequence.existents}


def constraint_violations(accepted: Sequence[Hypothesis], image_of: Mapping[str, int]) -> list[Violation]:
    """c1 and c2 over the referential part of ``accepted``."""
    refs = [h for h in accepted if h.kind is HypothesisKind.REFERENTIAL_IS]
    present = {frozenset((h.subject, h.object)) for h in refs}
    violations = []
    for cls in identity_classes(refs):
        members = sorted(cls)
        per_image: dict[int, list[str]] = defaultdict(list)
        for m in members:
            per_image[image_of[m]].append(m)
        for img, same in sorted(per_image.items()):
            if len(same) > 1:
                violations.append(Violation(
                    "c1", tuple(same),
                    f"identity class places {', '.join(same)} in image {img} at the same time"))
        for a, b in combinations(members, 2):
            if image_of[a] != image_of[b] and frozenset((a, b)) not in present:
                violations.append(Violation(
                    "c2", (a, b), f"{a} and {b} share an identity class but '{a} is {b}' is not accepted"))
    return violations


def effective_scores(ids: Iterable[str], pool: Pool) -> dict[str, float]:
    """Effective score of every accepted hypothesis.

    Premise evidence counts the premised hypothesis' own effective score, but
    only when that hypothesis is accepted too.
    """
    index = as_index(pool)
    accepted = {h.id for h in _lookup(ids, index)}
    memo: dict[str, float] = {}
    active: set[str] = set()

    def score(hid: str) -> float:
        if hid in memo:
            return memo[hid]
        if hid in active:
            raise ValueError(f"premise cycle through {hid!r}")
        active.add(hid)
        h = index[hid]
        parts = [h.own_score] + [score(p) for p in h.premises if p in accepted]
        active.discard(hid)
        memo[hid] = math.fsum(parts)
        return memo[hid]

    return {hid: score(hid) for hid in sorted(accepted)}


def effective_support(ids: Iterable[str], pool: Pool) -> float:
    return math.fsum(effective_scores(ids, pool).values())


def raw_score(hypothesis: Hypothesis, pool: Pool) -> float:
    """Score with every premise assumed accepted."""
    index = as_index(pool)
    seen: set[str] = set()

    def score(h: Hypothesis) -> float:
        if h.id in seen:
            raise ValueError(f"premise cycle through {h.id!r}")
        seen.add(h.id)
        total = math.fsum([h.own_score] + [score(index[p]) for p in h.premises if p in index])
        seen.discard(h.id)
        return total

    return score(hypothesis)


def check_feasible(ids: Iterable[str], pool: Pool, sequence: SceneGraphSequence) -> list[Violation]:
    """All constraint violations of the set; an empty list means feasible."""
    index = as_index(pool)
    accepted = _lookup(ids, index)
    violations = constraint_violations(accepted, _image_of(sequence))
    for hid, s in effective_scores([h.id for h in accepted], index).items():
        if s <= 0:
            violations.append(Violation("zero_support", (hid,), f"{hid} has no effective evidence"))
    return violations


# ---------------------------------------------------------------------------
# objectives


def concept_node(concept: str) -> str:
    return f"concept:{concept}"


def _hypothesis_edge(h: Hypothesis) -> tuple[str, str]:
    if h.kind is HypothesisKind.AFFECTIVE:
        return h.subject, concept_node(h.object)
    return h.subject, h.object


def _scene_edges(sequence: SceneGraphSequence) -> list[tuple[str, str]]:
    edges = []
    for ev in sequence.events:
        for p in ev.participants:
            edges.append((ev.id, p))
    return edges


def objective_graph(sequence: SceneGraphSequence, ids: Iterable[str] = (), pool: Pool = ()) -> nx.Graph:
    """Scene graph (existents, events, participation edges) plus accepted hypothesis edges.

    Affective hypotheses point at a concept node that exists only while some
    accepted hypothesis targets it.
    """
    index = as_index(pool)
    g = nx.Graph()
    g.add_nodes_from(e.id for e in sequence.existents)
    g.add_nodes_from(e.id for e in sequence.events)
    for u, v in _scene_edges(sequence):
        if u != v:
            g.add_edge(u, v, origin="observed")
    for h in _lookup(ids, index):
        u, v = _hypothesis_edge(h)
        if u != v:
            g.add_edge(u, v, origin="hypothesis", kind=h.kind.value)
    return g


def _vertex_connectivity(adj: Mapping[str, set[str]]) -> int:
    n = len(adj)
    if n < 2:
        return 0
    start = next(iter(adj))
    seen = {start}
    queue = deque([start])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    if len(seen) < n:
        return 0
    min_deg = min(len(nbs) for nbs in adj.values())
    if min_deg <= 1 or min_deg == n - 1:
        # connected: kappa <= min degree, and K_n has kappa = n - 1
        return min_deg
    g = nx.Graph()
    g.add_nodes_from(adj)
    g.add_edges_from((u, v) for u, nbs in adj.items() for v in nbs)
    return nx.node_connectivity(g)


def connectivity(graph: nx.Graph) -> int:
    """Vertex connectivity; 0 for disconnected graphs and graphs under 2 nodes."""
    return _vertex_connectivity({u: set(graph[u]) - {u} for u in graph.nodes})


def density(graph: nx.Graph) -> float:
    n = graph.number_of_nodes()
    if n < 2:
        return 0.0
    m = sum(1 for u, v in graph.edges if u != v)
    return m / (n * (n - 1) / 2)


def _is_better(a: SolutionSet, b: SolutionSet | None) -> bool:
    """Strict total order used by every solver."""
    if b is None:
        return True
    ka = (a.scalar_score, a.objectives.support, a.objectives.density, a.objectives.connectivity)
    kb = (b.scalar_score, b.objectives.support, b.objectives.density, b.objectives.connectivity)
    if ka != kb:
        return ka > kb
    return a.ids < b.ids


class Evaluator:
    """Scores hypothesis sets for one (pool, sequence, weights); results are cached."""

    def __init__(self, pool: Pool, sequence: SceneGraphSequence, weights: ObjectiveWeights | None = None):
        self.index = as_index(pool)
        self.sequence = sequence
        self.weights = weights or ObjectiveWeights()
        self.image_of = _image_of(sequence)
        self.total_raw = math.fsum(raw_score(h, self.index) for _, h in sorted(self.index.items()))
        self._base: dict[str, set[str]] = {e.id: set() for e in sequence.existents}
        self._base.update({e.id: set() for e in sequence.events})
        for u, v in _scene_edges(sequence):
            if u != v:
                self._base[u].add(v)
                self._base[v].add(u)
        self.cache: dict[frozenset[str], SolutionSet] = {}

    def objectives(self, ids: frozenset[str]) -> tuple[Objectives, int]:
        adj = {k: set(v) for k, v in self._base.items()}
        for hid in sorted(ids):
            u, v = _hypothesis_edge(self.index[hid])
            if u == v:
                continue
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        n = len(adj)
        m = sum(len(nbs) for nbs in adj.values()) // 2
        dens = m / (n * (n - 1) / 2) if n >= 2 else 0.0
        support = effective_support(ids, self.index)
        return Objectives(_vertex_connectivity(adj), dens, support), n

    def evaluate(self, ids: Iterable[str]) -> SolutionSet:
        key = frozenset(ids)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        unknown = key - self.index.keys()
        if unknown:
            raise UnknownHypothesisError(sorted(unknown)[0])
        obj, n = self.objectives(key)
        w = self.weights
        conn_term = obj.connectivity / (n - 1) if n >= 2 else 0.0
        support_term = obj.support / self.total_raw if self.total_raw > 0 else 0.0
        scalar = w.connectivity * conn_term + w.density * obj.density + w.support * support_term
        sol = SolutionSet(key, obj, scalar)
        self.cache[key] = sol
        return sol

    def evaluate_many(self, candidates: list[frozenset[str]], workers: int = 1) -> list[SolutionSet]:
        if workers > 1 and len(candidates) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(self.evaluate, candidates))
        return [self.evaluate(c) for c in candidates]

    def feasible(self, ids: Iterable[str]) -> bool:
        accepted = [self.index[i] for i in sorted(set(ids))]
        if constraint_violations(accepted, self.image_of):
            return False
        return all(s > 0 for s in effective_scores([h.id for h in accepted], self.index).values())


def evaluate_set(ids: Iterable[str], pool: Pool, sequence: SceneGraphSequence,
                 weights: ObjectiveWeights | None = None) -> SolutionSet:
    return Evaluator(pool, sequence, weights).evaluate(ids)


# ---------------------------------------------------------------------------
# oracle


def brute_force_oracle(pool: Pool, sequence: SceneGraphSequence,
                       weights: ObjectiveWeights | None = None) -> SolutionSet:
    """Best feasible set by enumerating every subset of the pool."""
    ev = Evaluator(pool, sequence, weights)
    ids = sorted(ev.index)
    if len(ids) > ORACLE_LIMIT:
        raise SolverLimitError(f"brute force oracle supports at most {ORACLE_LIMIT} hypotheses, got {len(ids)}")
    best = None
    for mask in range(1 << len(ids)):
        subset = [ids[i] for i in range(len(ids)) if mask >> i & 1]
        if check_feasible(subset, ev.index, sequence):
            continue
        sol = ev.evaluate(subset)
        if _is_better(sol, best):
            best = sol
    return best


# ---------------------------------------------------------------------------
# structured search space
#
# Only referential hypotheses can conflict. Given the identity partition, every
# causal hypothesis with a positive effective score is worth accepting (it adds
# an edge between existing nodes and strictly raises support), and so is every
# affective hypothesis whose target concept node is already present. The free
# choices are therefore the partition and which affective target concepts to
# bring into the graph.


Partition = frozenset  # frozenset[frozenset[str]] of classes with >= 2 members


class SearchSpace:
    def __init__(self, evaluator: Evaluator):
        self.ev = evaluator
        idx = evaluator.index
        self.ref_by_pair: dict[frozenset[str], str] = {}
        self.causal: list[str] = []
        self.groups: dict[str, list[str]] = defaultdict(list)
        for hid, h in sorted(idx.items()):
            if h.kind is HypothesisKind.REFERENTIAL_IS:
                if h.subject != h.object and raw_score(h, idx) > 0 and not h.premises:
                    self.ref_by_pair[frozenset((h.subject, h.object))] = hid
            elif h.kind is HypothesisKind.AFFECTIVE and not h.premises:
                if h.own_score > 0:
                    self.groups[h.object].append(hid)
            else:
                self.causal.append(hid)
        self.group_keys = sorted(self.groups)
        self.partners: dict[str, set[str]] = defaultdict(set)
        for pair in self.ref_by_pair:
            a, b = sorted(pair)
            self.partners[a].add(b)
            self.partners[b].add(a)

    @property
    def n_units(self) -> int:
        return len(self.ref_by_pair) + len(self.group_keys)

    def class_ok(self, members: Iterable[str]) -> bool:
        members = sorted(members)
        images = [self.ev.image_of.get(m) for m in members]
        if len(set(images)) != len(images):
            return False
        return all(frozenset(p) in self.ref_by_pair for p in combinations(members, 2))

    def materialize(self, partition: Partition, groups: frozenset[str]) -> frozenset[str]:
        accepted = {self.ref_by_pair[frozenset(p)] for cls in partition for p in combinations(sorted(cls), 2)}
        for g in groups:
            accepted.update(self.groups[g])
        if self.causal:
            # a causal hypothesis' effective score depends only on its accepted premises
            scores = effective_scores(accepted | set(self.causal), self.ev.index)
            accepted.update(c for c in self.causal if scores[c] > 0)
        return frozenset(accepted)

    # exhaustive ---------------------------------------------------------

    def components(self) -> list[list[str]]:
        seen: set[str] = set()
        comps = []
        for start in sorted(self.partners):
            if start in seen:
                continue
            comp, stack = [], [start]
            seen.add(start)
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in self.partners[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def partitions_of(self, members: list[str]) -> list[list[frozenset[str]]]:
        """Every valid partition of ``members`` into identity classes."""
        out: list[list[frozenset[str]]] = []

        def assign(i: int, classes: list[list[str]]) -> None:
            if i == len(members):
                out.append([frozenset(c) for c in classes if len(c) > 1])
                return
            x = members[i]
            for c in classes:
                if all(frozenset((x, y)) in self.ref_by_pair for y in c) and self.class_ok(c + [x]):
                    c.append(x)
                    assign(i + 1, classes)
                    c.pop()
            classes.append([x])
            assign(i + 1, classes)
            classes.pop()

        assign(0, [])
        return out

    def enumerate_all(self):
        per_comp = [self.partitions_of(c) for c in self.components()]
        for choice in product(*per_comp):
            partition = frozenset(cls for part in choice for cls in part)
            for mask in range(1 << len(self.group_keys)):
                groups = frozenset(g for i, g in enumerate(self.group_keys) if mask >> i & 1)
                yield partition, groups


def _class_map(partition: Partition) -> dict[str, frozenset[str]]:
    return {m: cls for cls in partition for m in cls}


def _neighbors(space: SearchSpace, partition: Partition, groups: frozenset[str]):
    """Local moves: add+close, remove a class member, move an existent between classes, toggle a target."""
    cmap = _class_map(partition)

    def cls_of(x: str) -> frozenset[str]:
        return cmap.get(x, frozenset((x,)))

    def rebuild(drop: Iterable[frozenset[str]], add: Iterable[frozenset[str]]) -> Partition:
        classes = set(partition) - set(drop)
        classes.update(c for c in add if len(c) > 1)
        return frozenset(classes)

    seen: set[tuple[Partition, frozenset[str]]] = set()
    out = []

    def emit(p: Partition, g: frozenset[str]) -> None:
        key = (p, g)
        if key not in seen and key != (partition, groups):
            seen.add(key)
            out.append(key)

    for pair in sorted(space.ref_by_pair, key=sorted):
        a, b = sorted(pair)
        ca, cb = cls_of(a), cls_of(b)
        if ca == cb:
            continue
        merged = ca | cb
        if space.class_ok(merged):
            emit(rebuild([ca, cb], [merged]), groups)
        for x, src, dst in ((a, ca, cb), (b, cb, ca)):
            moved = dst | {x}
            if space.class_ok(moved):
                emit(rebuild([src, dst], [src - {x}, moved]), groups)
    for cls in sorted(partition, key=sorted):
        for x in sorted(cls):
            emit(rebuild([cls], [cls - {x}]), groups)
    for g in space.group_keys:
        emit(partition, groups ^ {g})
    return out


def _hill_climb(space: SearchSpace, partition: Partition, groups: frozenset[str], workers: int) -> SolutionSet:
    ev = space.ev
    current = ev.evaluate(space.materialize(partition, groups))
    while True:
        moves = _neighbors(space, partition, groups)
        sets = [space.materialize(p, g) for p, g in moves]
        results = ev.evaluate_many(sets, workers)
        best_i = None
        for i, sol in enumerate(results):
            if _is_better(sol, current if best_i is None else results[best_i]):
                best_i = i
        if best_i is None:
            return current
        partition, groups = moves[best_i]
        current = results[best_i]


def _greedy_start(space: SearchSpace, order: list[str]) -> tuple[Partition, frozenset[str]]:
    """Add hypotheses by descending score, closing identity classes and skipping conflicts."""
    idx = space.ev.index
    rank = {hid: i for i, hid in enumerate(order)}
    ordered = sorted(order, key=lambda hid: (-raw_score(idx[hid], idx), rank[hid]))
    partition: Partition = frozenset()
    groups: set[str] = set()
    ref_ids = set(space.ref_by_pair.values())
    group_of = {hid: g for g, members in space.groups.items() for hid in members}
    for hid in ordered:
        if hid in ref_ids:
            h = idx[hid]
            cmap = _class_map(partition)
            ca = cmap.get(h.subject, frozenset((h.subject,)))
            cb = cmap.get(h.object, frozenset((h.object,)))
            if ca != cb and space.class_ok(ca | cb):
                partition = frozenset((set(partition) - {ca, cb}) | {ca | cb})
        elif hid in group_of:
            groups.add(group_of[hid])
    return partition, frozenset(groups)


def _local_search(space: SearchSpace, seed: int, restarts: int, workers: int) -> SolutionSet:
    ids = sorted(space.ev.index)
    rng = random.Random(seed)
    starts = [(frozenset(), frozenset())]
    for k in range(restarts):
        order = list(ids)
        if k:
            rng.shuffle(order)
        starts.append(_greedy_start(space, order))
    best = None
    for partition, groups in starts:
        sol = _hill_climb(space, partition, groups, workers)
        if _is_better(sol, best):
            best = sol
    return best


def _exhaustive(space: SearchSpace, workers: int) -> SolutionSet:
    if space.n_units > EXHAUSTIVE_LIMIT:
        raise SolverLimitError(
            f"exhaustive search supports at most {EXHAUSTIVE_LIMIT} conflict-bearing hypotheses "
            f"(referential hypotheses plus affective targets), got {space.n_units}")
    best = None
    batch: list[frozenset[str]] = []

    def flush():
        nonlocal best
        for sol in space.ev.evaluate_many(batch, workers):
            if _is_better(sol, best):
                best = sol
        batch.clear()

    for partition, groups in space.enumerate_all():
        batch.append(space.materialize(partition, groups))
        if len(batch) >= 256:
            flush()
    flush()
    return best


def solve(pool: Pool, sequence: SceneGraphSequence, weights: ObjectiveWeights | None = None,
          strategy: str = "local_search", seed: int = DEFAULT_SEED, workers: int = 1,
          restarts: int = LOCAL_SEARCH_RESTARTS) -> SolutionSet:
    """Best feasible hypothesis set under the weighted objective and tie-break order."""
    ev = Evaluator(pool, sequence, weights)
    return _run(ev, strategy, seed, workers, restarts)


def _run(ev: Evaluator, strategy: str, seed: int, workers: int, restarts: int) -> SolutionSet:
    space = SearchSpace(ev)
    if not ev.index:
        return ev.evaluate(())
    strategy = strategy.replace("-", "_")
    if strategy == "exhaustive":
        sol = _exhaustive(space, workers)
    elif strategy == "local_search":
        sol = _local_search(space, seed, restarts, workers)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if not ev.feasible(sol.accepted):
        raise AssertionError(f"solver produced an infeasible set: {sol.ids}")
    return sol


def pareto_front(pool: Pool, sequence: SceneGraphSequence, weights: ObjectiveWeights | None = None,
                 strategy: str = "local_search", seed: int = DEFAULT_SEED, workers: int = 1) -> list[SolutionSet]:
    """Non-dominated (connectivity, density, support) sets among those the solver evaluated."""
    ev = Evaluator(pool, sequence, weights)
    _run(ev, strategy, seed, workers, LOCAL_SEARCH_RESTARTS)
    sols = [s for s in ev.cache.values() if ev.feasible(s.accepted)]

    def vec(s: SolutionSet) -> tuple:
        return (s.objectives.connectivity, s.objectives.density, s.objectives.support)

    front = [s for s in sols
             if not any(all(x >= y for x, y in zip(vec(o), vec(s))) and vec(o) != vec(s) for o in sols)]
    front.sort(key=lambda s: (-s.scalar_score, s.ids))
    return front
