#!/usr/bin/env python3
"""Witness dynamics under constant drives, for both initial-state families.

Each ground-state run starts from the ground state of its own static
Hamiltonian; coherent runs start from |alpha=1, down>.  Writes dynamics.csv.
"""

import argparse
import os
import sys

from tprabi.cli import ExperimentConfig, run_dynamics_scan
from tprabi.fock import ModelParams
from tprabi.lindblad import Dissipation


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out_dynamics")
    parser.add_argument("--omegas", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3, 0.4])
    parser.add_argument("--nbar", type=float, default=0.0)
    args = parser.parse_args()

    config = ExperimentConfig(
        mode="dynamics", out_dir=args.out,
        model=ModelParams(g=0.3, m_trunc=60),
        dissipation=Dissipation(nbar=args.nbar),
        scan_omegas=tuple(args.omegas),
        scan_states=("ground", "coherent_down"),
    )
    os.makedirs(args.out, exist_ok=True)
    code = run_dynamics_scan(config)
    print(f"wrote {args.out}/dynamics.csv (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
