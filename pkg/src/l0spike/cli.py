"""Command-line interface: deconvolve, simulate, evaluate, tune, benchmark.

Exit codes: 0 on success, 2 on argument/parse/config problems, 1 on runtime
failures. All numeric file formats are documented in `l0spike.io`.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from . import io
from .metrics import MetricParams, binned_correlation, van_rossum, victor_purpura
from .oracle import op_solve
from .simulate import SimulationConfig, generate
from .solver import SolverConfig, Trace, max_region_count, solve, solve_with_intercept
from .tuning import IndicatorClass, gamma_from_rate, tune_lambda


def _grid(spec: str, log: bool) -> np.ndarray:
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise ValueError(f"grid must look like lo:hi:n, got {spec!r}")
    if n < 1:
        raise ValueError("grid needs at least one point")
    if n == 1:
        return np.array([lo])
    if log:
        if lo <= 0 or hi <= 0:
            raise ValueError("log grid bounds must be positive")
        return np.logspace(np.log10(lo), np.log10(hi), n)
    return np.linspace(lo, hi, n)


def cmd_deconvolve(args) -> int:
    trace = io.read_trace(args.input, args.rate)
    cfg = SolverConfig(
        gamma=args.gamma,
        lam=args.lam,
        constrained=not args.unconstrained,
        rho=args.rho,
        beta0=args.beta0,
    )
    if args.beta0_grid is not None:
        result, beta0 = solve_with_intercept(trace, cfg, _grid(args.beta0_grid, log=False))
    else:
        result = solve(trace, cfg)
    payload = io.result_to_dict(result, rate=trace.rate, include_calcium=not args.no_calcium)
    text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    cfg = SimulationConfig(
        T=args.T,
        gamma=args.gamma,
        beta0=args.beta0,
        sigma=args.sigma,
        theta=args.theta,
        spike_amplitude=args.amplitude,
        seed=args.seed,
    )
    sim = generate(cfg)
    io.write_trace(f"{args.output_prefix}.csv", Trace(sim.y, args.rate))
    io.write_spikes(f"{args.output_prefix}.spikes.txt", sim.spike_seconds(args.rate))
    return 0


def _load_estimated(path, rate):
    """Spike text file, or a deconvolution result JSON."""
    head = open(path, "r", encoding="utf-8").read(1).strip()
    if head == "{":
        payload = json.load(open(path, encoding="utf-8"))
        spikes = payload["spikes"]
        if rate is not None:
            return np.array(sorted((s["index"] - 1) / rate for s in spikes))
        return np.array(sorted(s["time_s"] for s in spikes))
    return io.read_spikes(path).times


def cmd_evaluate(args) -> int:
    est = _load_estimated(args.estimated, args.rate)
    truth = io.read_spikes(args.truth).times
    if args.metric == "vr":
        value = van_rossum(est, truth, args.vr_tau)
    elif args.metric == "vp":
        value = victor_purpura(est, truth, args.vp_q)
    else:
        value = binned_correlation(est, truth, args.bin).value
    print(f"{value:.6g}")
    if args.json:
        report = {
            "metric": args.metric,
            "value": value,
            "estimated": str(args.estimated),
            "truth": str(args.truth),
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_tune(args) -> int:
    trace = io.read_trace(args.input, args.rate)
    truth = io.read_spikes(args.truth)
    if args.gamma is not None:
        gamma = args.gamma
    elif args.indicator_class is not None:
        gamma = gamma_from_rate(trace.rate, IndicatorClass.from_name(args.indicator_class))
    else:
        raise ValueError("provide --gamma, or --class (with the trace rate)")
    cfg = SolverConfig(gamma=gamma, lam=1.0, constrained=not args.unconstrained)
    params = MetricParams(vr_tau=args.vr_tau, vp_q=args.vp_q, corr_bin=args.bin)
    report = tune_lambda(trace, truth, _grid(args.lambda_grid, log=True), args.metric, params, cfg)
    prefix = args.output_prefix
    with open(f"{prefix}.csv", "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    print(f"chosen_lambda={report.chosen_lam:.6g} test_score={report.test_score:.6g}")
    return 0


def cmd_benchmark(args) -> int:
    if args.solver == "op" and args.constrained:
        raise ValueError("the optimal-partitioning baseline is unconstrained only")
    rows = ["rep,solver,T,theta,gamma,sigma,seed,wall_s,objective,max_regions"]
    walls = []
    for rep in range(args.reps):
        seed = args.seed + rep
        sim = generate(
            SimulationConfig(T=args.T, gamma=args.gamma, sigma=args.sigma,
                             theta=args.theta, seed=seed)
        )
        cfg = SolverConfig(gamma=args.gamma, lam=args.lam, constrained=args.constrained)
        t0 = time.perf_counter()
        if args.solver == "fpop":
            res = solve(sim.y, cfg)
        else:
            res = op_solve(sim.y, cfg)
        wall = time.perf_counter() - t0
        walls.append(wall)
        regions = max_region_count(res) if args.solver == "fpop" else ""
        rows.append(
            f"{rep},{args.solver},{args.T},{args.theta},{args.gamma},{args.sigma},"
            f"{seed},{wall:.6f},{res.objective!r},{regions}"
        )
    text = "\n".join(rows) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"median_wall_s={statistics.median(walls):.6f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l0spike",
        description="L0-penalized spike deconvolution of calcium fluorescence traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deconvolve", help="deconvolve a trace file into spikes")
    p.add_argument("--input", required=True)
    p.add_argument("--gamma", type=float, required=True, help="per-timestep decay in (0,1)")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="penalty per spike")
    p.add_argument("--unconstrained", action="store_true",
                   help="drop the nonnegative-spike constraint")
    p.add_argument("--beta0", type=float, default=0.0, help="baseline to subtract")
    p.add_argument("--beta0-grid", default=None, metavar="LO:HI:N",
                   help="search this baseline grid instead of a fixed --beta0")
    p.add_argument("--rho", type=float, default=1e-40, help="calcium floor")
    p.add_argument("--rate", type=float, default=None, help="sampling rate in Hz")
    p.add_argument("--no-calcium", action="store_true", help="omit the calcium array")
    p.add_argument("--output", default=None, help="result JSON path (default stdout)")
    p.set_defaults(func=cmd_deconvolve)

    p = sub.add_parser("simulate", help="generate a synthetic trace plus truth spikes")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--theta", type=float, required=True, help="spikes per timestep")
    p.add_argument("--beta0", type=float, default=0.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--output-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score estimated spikes against ground truth")
    p.add_argument("--estimated", required=True,
                   help="spike text file, or a deconvolution result JSON")
    p.add_argument("--truth", required=True)
    p.add_argument("--metric", choices=["vr", "vp", "corr"], required=True)
    p.add_argument("--vr-tau", type=float, default=0.1)
    p.add_argument("--vp-q", type=float, default=10.0)
    p.add_argument("--bin", type=float, default=0.04)
    p.add_argument("--rate", type=float, default=None,
                   help="recompute result-JSON spike times from indices at this rate")
    p.add_argument("--json", default=None, help="also write a JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune", help="train/test penalty search against a metric")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--metric", choices=["vr", "vp", "corr"], required=True)
    p.add_argument("--lambda-grid", required=True, metavar="LO:HI:N",
                   help="log-spaced penalty grid")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--class", dest="indicator_class", choices=["fast", "medium", "slow"],
                   default=None, help="derive gamma from the indicator speed class")
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--vr-tau", type=float, default=0.1)
    p.add_argument("--vp-q", type=float, default=10.0)
    p.add_argument("--bin", type=float, default=0.04)
    p.add_argument("--unconstrained", action="store_true")
    p.add_argument("--output-prefix", default="tune_report")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("benchmark", help="time a solver on simulated traces")
    p.add_argument("--solver", choices=["fpop", "op"], required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver/runtime failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
