#!/usr/bin/env python3
"""Linear memory capacity of fermion, qubit and boson reservoirs, side by side.

Runs the paired-seed linear MC sweep for each particle type at the default
operating point (N=4, dt=10, M=10 two-site observables) and, when the
qrcbench-figures package is installed, renders the delay profile.

Example:
    python scripts/run_mc_comparison.py --seeds 0..19 --out out/mc_comparison
"""

import argparse
from pathlib import Path

from qrcbench.config import ExperimentConfig, parse_seed_spec
from qrcbench.sweep import run_sweep

SETUPS = {
    "fermion": dict(statistics="fermion"),
    "qubit": dict(statistics="qubit"),
    "boson_e1": dict(statistics="boson", excitation=1),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", default="0..19")
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--out", default="out/mc_comparison")
    parser.add_argument("--boson-e2", action="store_true",
                        help="also run the level-2 boson encoding (slow)")
    args = parser.parse_args()

    seeds = parse_seed_spec(args.seeds)
    if args.boson_e2:
        SETUPS["boson_e2"] = dict(statistics="boson", excitation=2)
    run_dirs = []
    for label, proto in SETUPS.items():
        cfg = ExperimentConfig(seeds=seeds, threads=args.threads, **proto)
        out_dir = Path(args.out) / label
        manifest, code = run_sweep(cfg, "mc", out_dir)
        print(f"{label}: exit {code}, {manifest.wall_clock_s:.0f}s -> {out_dir}")
        run_dirs.append(out_dir)

    try:
        from qrcfigures import render
    except ImportError:
        print("qrcbench-figures not installed; skipping the plot")
        return
    for path in render("mc-delay", run_dirs, Path(args.out) / "figures"):
        print(path)


if __name__ == "__main__":
    main()
