"""Run the full pipeline on the bundled fixtures; write JSON and DOT per fixture.

    python scripts/run_fixtures.py --outdir runs
"""
import argparse
from importlib.resources import files
from pathlib import Path

from sensemaking.cli import main

DATA = files("sensemaking") / "data"


def run(name: str, outdir: Path, solver: str, workers: int) -> int:
    print(f"== {name} ({solver}) ==")
    return main([
        "--scene-graphs", str(DATA / f"{name}.json"),
        "--kb", str(DATA / f"{name}_kb.tsv"),
        "--config", str(DATA / "categories.json"),
        "--solver", solver,
        "--workers", str(workers),
        "--pareto",
        "--out", str(outdir / f"{name}.json"),
        "--dot", str(outdir / f"{name}.dot"),
    ])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, default=Path("runs"))
    ap.add_argument("--solver", default="exhaustive", choices=["exhaustive", "local-search"])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    codes = [run(n, args.outdir, args.solver, args.workers) for n in ("frisbee", "horse")]
    raise SystemExit(max(codes))
