#!/usr/bin/env python3
"""Echo-state (convergence) test for the three particle types.

Drives two reservoir copies from different initial states with identical
inputs and tracks the Frobenius distance; fermions forget their initial
condition much more slowly than qubits or bosons.

Example:
    python scripts/run_convergence_comparison.py --seeds 0..49 --steps 600
"""

import argparse
from pathlib import Path

from qrcbench.config import ExperimentConfig, parse_seed_spec
from qrcbench.sweep import run_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", default="0..49")
    parser.add_argument("--steps", type=int, default=600)
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--out", default="out/convergence")
    args = parser.parse_args()

    seeds = parse_seed_spec(args.seeds)
    run_dirs = []
    for statistics in ("qubit", "fermion", "boson"):
        cfg = ExperimentConfig(statistics=statistics, seeds=seeds,
                               threads=args.threads, n_steps=args.steps)
        out_dir = Path(args.out) / statistics
        manifest, code = run_sweep(cfg, "converge", out_dir)
        print(f"{statistics}: exit {code}, {manifest.wall_clock_s:.0f}s -> {out_dir}")
        run_dirs.append(out_dir)

    try:
        from qrcfigures import render
    except ImportError:
        print("qrcbench-figures not installed; skipping the plot")
        return
    for path in render("convergence", run_dirs, Path(args.out) / "figures"):
        print(path)


if __name__ == "__main__":
    main()
