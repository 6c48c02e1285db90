#!/usr/bin/env python3
"""Region-growth experiment: how many changepoint candidates stay alive.

Simulates traces across spike rates and lengths, solves the unconstrained
problem at a fixed penalty, and records the maximum number of surviving
regions per solve. Output is plot-ready CSV: theta,T,rep,max_regions,wall_s.
"""

import argparse
import sys
import time

from l0spike import SolverConfig, max_region_count, solve
from l0spike.simulate import SimulationConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", type=float, nargs="+", default=[0.1, 0.01, 0.001])
    ap.add_argument("--lengths", type=int, nargs="+",
                    default=[1000, 10_000, 100_000])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--gamma", type=float, default=0.998)
    ap.add_argument("--sigma", type=float, default=0.15)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default=None, help="CSV path (default stdout)")
    args = ap.parse_args()

    out = open(args.output, "w") if args.output else sys.stdout
    print("theta,T,rep,max_regions,wall_s", file=out)
    cfg_base = dict(gamma=args.gamma, lam=args.lam, constrained=False)
    for theta in args.thetas:
        for T in args.lengths:
            for rep in range(args.reps):
                sim = generate(SimulationConfig(
                    T=T, gamma=args.gamma, sigma=args.sigma, theta=theta,
                    seed=args.seed + rep,
                ))
                t0 = time.perf_counter()
                res = solve(sim.y, SolverConfig(**cfg_base))
                wall = time.perf_counter() - t0
                print(f"{theta},{T},{rep},{max_region_count(res)},{wall:.4f}",
                      file=out)
    if args.output:
        out.close()


if __name__ == "__main__":
    main()
