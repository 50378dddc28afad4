#!/usr/bin/env python3
"""Spectrum of the fixed-input injection channel over a grid of input values.

For each coupling realization and input value u, builds the Kraus family of
the injection channel, forms the transfer matrix and reports the spectral
radius (always 1) and the second-largest eigenvalue modulus, whose gap to 1
sets the reservoir's forgetting rate.

Example:
    python scripts/run_channel_spectrum.py --seeds 0..9 --n-sites 3
"""

import argparse

from qrcbench.config import ExperimentConfig, parse_seed_spec
from qrcbench.sweep import run_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", default="0..9")
    parser.add_argument("--n-sites", type=int, default=3)
    parser.add_argument("--statistics", default="qubit",
                        choices=["qubit", "fermion", "boson"])
    parser.add_argument("--u-grid", default="0.1,0.3,0.5,0.7,0.9")
    parser.add_argument("--out", default="out/spectrum")
    parser.add_argument("--moduli", action="store_true",
                        help="emit the full list of eigenvalue moduli per row")
    args = parser.parse_args()

    cfg = ExperimentConfig(
        statistics=args.statistics,
        n_sites=args.n_sites,
        seeds=parse_seed_spec(args.seeds),
        u_grid=[float(u) for u in args.u_grid.split(",")],
        emit_moduli=args.moduli,
    )
    manifest, code = run_sweep(cfg, "spectrum", args.out)
    print(f"spectrum: exit {code}, {manifest.wall_clock_s:.0f}s -> {args.out}")


if __name__ == "__main__":
    main()
