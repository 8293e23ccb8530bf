#!/usr/bin/env python3
"""Reproduce the benchmark figures' data files from the shipped configs.

Examples:
    python scripts/reproduce_figures.py fig2 --threads 4
    python scripts/reproduce_figures.py all --fast --out results_fast
    python scripts/reproduce_figures.py oracles

Full runs take a while at the published epoch counts; --fast scales epochs and
restarts down 10x for a quick look.
"""

import argparse
import sys
from pathlib import Path

from buresq.cli import _with_overrides, load_config, run_oracle_scan, run_sweep, parse_grid

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

FIGURES = {
    "fig2": "fig2_werner.json",
    "fig3": "fig3_cluster.json",
    "fig4": "fig4_smolin.json",
    "figS5": "figS5_werner_arbitrary.json",
    "figS6": "figS6_cluster_arbitrary.json",
    "figS7": "figS7_smolin_arbitrary.json",
    "figS8": "figS8_smolin_traces.json",
    "figS9": "figS9_cluster_traces.json",
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("target", choices=[*FIGURES, "oracles", "all"])
    parser.add_argument("--fast", action="store_true")
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    targets = list(FIGURES) if args.target == "all" else [args.target]
    if args.target in ("oracles", "all"):
        run_oracle_scan("werner", parse_grid("0.0:1.0:0.01"), args.out)
        run_oracle_scan("cluster", parse_grid("0.80:0.95:0.01"), args.out)
        run_oracle_scan("smolin", parse_grid("0.0:1.0:0.05"), args.out)
        print(f"oracle scans -> {args.out}")
        if args.target == "oracles":
            return 0

    for name in targets:
        config = _with_overrides(
            load_config(CONFIG_DIR / FIGURES[name]), args.seed, args.fast
        )
        path = run_sweep(config, args.out, threads=args.threads)
        print(f"{name} -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
