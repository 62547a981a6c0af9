#!/usr/bin/env python3
"""Monte Carlo validation of the analytic decoherence curves.

Simulates a million trajectories of the photon-scattering compound Poisson
process and of the Cauchy (alpha = 1) stable process, estimates empirical
characteristic functions, and writes per-point comparisons with 3-sigma
bands to out/.
"""

import pathlib
import sys

from levydec.cli import main

OUT = pathlib.Path(__file__).resolve().parent.parent / "out"

RUNS = [
    ("mc_mandel_compound.csv",
     ["montecarlo", "--compound", "rate=2", "--pd", "mandel,k0=1",
      "--samples", "1000000", "--seed", "12345", "--grid", "-10:10:201"]),
    ("mc_stable_cauchy.csv",
     ["montecarlo", "--stable", "alpha=1,K=1,x0=1",
      "--samples", "1000000", "--seed", "2024", "--grid", "-6:6:201"]),
]

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    status = 0
    for name, args in RUNS:
        rc = main(args + ["--out", str(OUT / name)])
        print(f"{'wrote' if rc == 0 else 'FAILED'} {OUT / name}")
        status = status or rc
    sys.exit(status)
