"""Local search against the brute-force oracle on random instances.

Reports the score ratio distribution and wall time per solver.

    python scripts/bench_local_search.py --instances 300 --max-hypotheses 14
"""
import argparse
import random
import statistics
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from instances import random_instance  # noqa: E402
from sensemaking.hypeval import brute_force_oracle, solve  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description="local search vs oracle")
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--max-hypotheses", type=int, default=12)
    ap.add_argument("--restarts", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    ratios, timings = [], {"oracle": 0.0, "exhaustive": 0.0, "local_search": 0.0}
    exact = 0
    for _ in range(args.instances):
        seq, kb, pool = random_instance(rng, max_hypotheses=args.max_hypotheses)
        t = time.perf_counter()
        oracle = brute_force_oracle(pool, seq)
        timings["oracle"] += time.perf_counter() - t
        t = time.perf_counter()
        solve(pool, seq, strategy="exhaustive")
        timings["exhaustive"] += time.perf_counter() - t
        t = time.perf_counter()
        local = solve(pool, seq, strategy="local_search", restarts=args.restarts)
        timings["local_search"] += time.perf_counter() - t
        exact += local == oracle
        if oracle.scalar_score > 0:
            ratios.append(local.scalar_score / oracle.scalar_score)

    print(f"instances: {args.instances}  local search hit the optimum on {exact}")
    if ratios:
        print(f"ratio min={min(ratios):.4f} mean={statistics.fmean(ratios):.4f}")
    for k, v in timings.items():
        print(f"{k:>12}: {v:.2f}s total")


if __name__ == "__main__":
    main()
