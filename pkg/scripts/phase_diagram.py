#!/usr/bin/env python3
"""Phase-diagram data on a coarse grid: gap, KL metric, witness, Wigner
negativity average per (g, omega) cell.

Writes sweep.csv into --out; bump the grid for production figures.
"""

import argparse
import sys

from tprabi.cli import ExperimentConfig, run_sweep
from tprabi.fock import ModelParams
from tprabi.lindblad import Dissipation


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out_phase")
    parser.add_argument("--points", type=int, default=12, help="grid points per axis")
    parser.add_argument("--threads", type=int, default=2)
    args = parser.parse_args()

    config = ExperimentConfig(
        mode="sweep", out_dir=args.out,
        model=ModelParams(m_trunc=60),
        dissipation=Dissipation(),
        threads=args.threads,
        g_range=(0.0, 0.5, args.points),
        omega_range=(0.0, 0.6, args.points),
        wigner_points=100,
    )
    import os

    os.makedirs(args.out, exist_ok=True)
    code = run_sweep(config)
    print(f"wrote {args.out}/sweep.csv (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
