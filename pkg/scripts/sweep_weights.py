"""Which hypothesis set wins on a fixture as the objective weights change.

    python scripts/sweep_weights.py horse
"""
import argparse
import itertools
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from instances import fixture  # noqa: E402
from sensemaking.hypeval import ObjectiveWeights, solve  # noqa: E402
from sensemaking.hypgen import generate_pool  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description="objective weight sweep")
    ap.add_argument("fixture", nargs="?", default="horse", choices=["horse", "frisbee"])
    ap.add_argument("--grid", default="0,0.5,1,2")
    args = ap.parse_args()

    seq, kb = fixture(args.fixture)
    pool = generate_pool(seq, kb)
    grid = [float(x) for x in args.grid.split(",")]
    print(f"{'w_conn':>7} {'w_dens':>7} {'w_supp':>7}  conn  density  support  accepted")
    for w in itertools.product(grid, repeat=3):
        if not any(w):
            continue
        sol = solve(pool, seq, ObjectiveWeights(*w), strategy="exhaustive")
        o = sol.objectives
        print(f"{w[0]:>7g} {w[1]:>7g} {w[2]:>7g}  {o.connectivity:>4}  {o.density:.4f}  {o.support:>7g}  {len(sol.accepted)}")


if __name__ == "__main__":
    main()
