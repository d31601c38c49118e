"""Command-line pipeline: parse -> load KB -> link -> generate -> solve -> export."""
from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from .core import HypothesisKind, validate
from .export import build_sensemaking_graph, export_dot, export_json
from .hypeval import (
    DEFAULT_SEED,
    ObjectiveWeights,
    SolverLimitError,
    check_feasible,
    effective_scores,
    pareto_front,
    solve,
)
from .hypgen import DEFAULT_EXACT_MATCH_R, generate_pool
from .ingest import CategoryConfig, IngestError, link_concepts, load_knowledge_base, parse_scene_graphs
from .kb_query import DEFAULT_MAX_PATH_LEN

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INVARIANT = 2


class InvariantError(RuntimeError):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sensemaking",
        description="Build a sensemaking knowledge graph from scene graphs and a commonsense knowledge base.",
    )
    p.add_argument("--scene-graphs", required=True, type=Path, help="scene graph sequence file")
    p.add_argument("--format", default="canonical", choices=["canonical", "visual-genome"])
    p.add_argument("--kb", required=True, type=Path, help="knowledge base file")
    p.add_argument("--kb-format", default="tsv", choices=["tsv", "conceptnet"])
    p.add_argument("--kb-language", default="en", help="language filter for ConceptNet dumps")
    p.add_argument("--config", type=Path, help="relation category config (JSON)")
    p.add_argument("--max-path-len", type=int, default=DEFAULT_MAX_PATH_LEN)
    p.add_argument("--exact-match-r", type=float, default=DEFAULT_EXACT_MATCH_R)
    p.add_argument("--solver", default="local-search", choices=["exhaustive", "local-search"])
    p.add_argument("--weights", default="1,1,1", help="connectivity,density,support weights")
    p.add_argument("--pareto", action="store_true", help="also report the non-dominated sets seen")
    p.add_argument("--out", type=Path, help="write the graph as JSON")
    p.add_argument("--dot", type=Path, help="write the graph as Graphviz DOT")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    return p


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def run_pipeline(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    if args.max_path_len < 1:
        raise ValueError("--max-path-len must be >= 1")
    if args.exact_match_r < 0:
        raise ValueError("--exact-match-r must be non-negative")
    weights = ObjectiveWeights.parse(args.weights)
    config = CategoryConfig.from_json(args.config.read_bytes()) if args.config else CategoryConfig()
    kb_format = "conceptnet_dump" if args.kb_format == "conceptnet" else "canonical_tsv"
    kb = load_knowledge_base(args.kb.read_bytes(), kb_format, config, language=args.kb_language)
    sequence = parse_scene_graphs(args.scene_graphs.read_bytes(), args.format)

    sequence = link_concepts(sequence, kb)
    problems = validate(sequence)
    if problems:
        raise InvariantError("linked sequence failed validation: " + "; ".join(problems))
    pool = generate_pool(sequence, kb, r=args.exact_match_r, max_len=args.max_path_len)
    strategy = args.solver.replace("-", "_")
    solution = solve(pool, sequence, weights, strategy=strategy, seed=args.seed, workers=args.workers)
    violations = check_feasible(solution.accepted, pool, sequence)
    if violations:
        raise InvariantError("solution is infeasible: " + "; ".join(v.message for v in violations))

    graph = build_sensemaking_graph(sequence, kb, solution, pool)
    if args.out:
        args.out.write_bytes(export_json(graph))
    if args.dot:
        args.dot.write_bytes(export_dot(graph))

    generated = Counter(h.kind for h in pool)
    index = {h.id: h for h in pool}
    accepted = Counter(index[i].kind for i in solution.accepted)
    obj = solution.objectives
    print(f"images: {len(sequence.images)}  existents: {len(sequence.existents)}  events: {len(sequence.events)}", file=out)
    for kind in HypothesisKind:
        print(f"{kind.value:>10}: {generated[kind]} generated, {accepted[kind]} accepted", file=out)
    print(f"objectives: connectivity={obj.connectivity} density={_fmt(obj.density)} "
          f"support={_fmt(obj.support)} scalar={_fmt(solution.scalar_score)}", file=out)
    scores = effective_scores(solution.accepted, pool)
    for hid in solution.ids:
        print(f"  {index[hid].kind.value:>10}  {_fmt(scores[hid]):>8}  {hid}", file=out)

    if args.pareto:
        front = pareto_front(pool, sequence, weights, strategy=strategy, seed=args.seed, workers=args.workers)
        print(f"pareto front ({len(front)} sets):", file=out)
        for sol in front:
            o = sol.objectives
            print(f"  connectivity={o.connectivity} density={_fmt(o.density)} support={_fmt(o.support)} "
                  f"scalar={_fmt(sol.scalar_score)} size={len(sol.accepted)}", file=out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run_pipeline(args)
    except (OSError, IngestError, SolverLimitError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantError, AssertionError) as e:
        print(f"internal invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
