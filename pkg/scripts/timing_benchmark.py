#!/usr/bin/env python3
"""Timing ladder: functional pruning vs quadratic-time optimal partitioning.

Emits plot-ready CSV (solver,theta,T,rep,wall_s,objective). The baseline is
skipped above --op-max-t because its quadratic cost becomes impractical.
"""

import argparse
import sys
import time

from l0spike import SolverConfig, solve
from l0spike.oracle import op_solve
from l0spike.simulate import SimulationConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", type=float, nargs="+", default=[0.01])
    ap.add_argument("--lengths", type=int, nargs="+",
                    default=[1000, 3162, 10_000, 31_623, 100_000])
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--gamma", type=float, default=0.998)
    ap.add_argument("--sigma", type=float, default=0.15)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--op-max-t", type=int, default=31_623)
    ap.add_argument("--output", default=None)
    args = ap.parse_args()

    # warm the JIT so compile time stays out of the measurements
    warm = generate(SimulationConfig(T=64, gamma=args.gamma, sigma=args.sigma,
                                     theta=args.thetas[0], seed=0))
    cfg = SolverConfig(gamma=args.gamma, lam=args.lam, constrained=False)
    solve(warm.y, cfg)
    op_solve(warm.y, cfg)

    out = open(args.output, "w") if args.output else sys.stdout
    print("solver,theta,T,rep,wall_s,objective", file=out)
    for theta in args.thetas:
        for T in args.lengths:
            for rep in range(args.reps):
                sim = generate(SimulationConfig(
                    T=T, gamma=args.gamma, sigma=args.sigma, theta=theta,
                    seed=args.seed + rep,
                ))
                for name, fn in (("fpop", solve), ("op", op_solve)):
                    if name == "op" and T > args.op_max_t:
                        continue
                    t0 = time.perf_counter()
                    res = fn(sim.y, cfg)
                    wall = time.perf_counter() - t0
                    print(f"{name},{theta},{T},{rep},{wall:.4f},{res.objective!r}",
                          file=out)
    if args.output:
        out.close()


if __name__ == "__main__":
    main()
