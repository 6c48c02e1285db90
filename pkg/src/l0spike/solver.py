"""Functional-pruning dynamic programs for L0 spike deconvolution.

Solves the penalized segmentation of a fluorescence trace into exponentially
decaying pieces, either with the spike positivity constraint (every jump in
calcium is nonnegative) or without it. The forward pass maintains the optimal
segmentation cost as a piecewise quadratic in the current calcium level; the
backward pass reads changepoints off the stored piece labels.

Two engines produce identical results: a readable one composed from the
`piecewise` algebra, and a numba kernel used by default (required for traces
of 10^5 samples).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import piecewise as pw
from . import _engine

INF = math.inf

DEFAULT_RHO = 1e-40


@dataclass(frozen=True)
class Trace:
    """Fluorescence samples with their acquisition rate (Hz)."""

    values: np.ndarray
    rate: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1:
            raise ValueError("trace must be one-dimensional")
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SolverConfig:
    """Decay, penalty, and numerical parameters of one solve.

    gamma: per-timestep calcium decay, in (0, 1).
    lam: penalty per spike, >= 0.
    constrained: require nonnegative spike magnitudes (the biological model).
    rho: smallest admissible calcium level; keeps repeatedly rescaled
        quadratic coefficients finite and effectively bounds segment length.
    beta0: scalar baseline subtracted from the trace before fitting.
    """

    gamma: float
    lam: float
    constrained: bool = True
    rho: float = DEFAULT_RHO
    beta0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not math.isfinite(self.beta0):
            raise ValueError("beta0 must be finite")


@dataclass
class DeconvolutionResult:
    """Decoded optimum of one solve.

    Timesteps are 1-based throughout: changepoint tau means the spike sits at
    timestep tau + 1. `calcium[t-1]` is the estimate for timestep t.
    """

    changepoints: list[int]
    spikes: list[tuple[int, float]]
    calcium: np.ndarray
    objective: float
    region_stats: np.ndarray
    config: SolverConfig
    cost_functions: list[pw.CostFunction] | None = field(default=None, repr=False)

    @property
    def spike_times(self) -> list[int]:
        return [t for t, _ in self.spikes]

    @property
    def spike_magnitudes(self) -> list[float]:
        return [z for _, z in self.spikes]


def _as_values(y) -> np.ndarray:
    values = y.values if isinstance(y, Trace) else np.asarray(y, dtype=np.float64)
    if values.ndim != 1 or len(values) == 0:
        raise ValueError("trace must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(values)):
        raise ValueError("trace values must be finite")
    return np.ascontiguousarray(values, dtype=np.float64)


def solve(
    y: Trace | Sequence[float] | np.ndarray,
    cfg: SolverConfig,
    *,
    engine: str = "fast",
    keep_cost_functions: bool = False,
) -> DeconvolutionResult:
    """Globally optimal deconvolution of a single trace.

    Forward pass: starting from the single squared-residual quadratic of the
    first sample, each step rescales the previous optimal cost onto the new
    calcium level, takes the pointwise minimum against the new-changepoint
    branch (a constant in the unconstrained problem, the penalized running
    minimum in the constrained one), and adds the new sample's residual term.
    All per-step cost functions are retained. Backward pass: repeatedly read
    the minimizing piece's label as the most recent changepoint and fill the
    segment's calcium by dividing by gamma. In the constrained problem the
    per-step minimization is restricted to calcium levels that keep the
    following spike nonnegative.
    """
    values = _as_values(y) - cfg.beta0
    if engine == "fast":
        return _solve_fast(values, cfg, keep_cost_functions)
    if engine == "reference":
        return _solve_reference(values, cfg, keep_cost_functions)
    raise ValueError(f"unknown engine {engine!r}")


def solve_with_intercept(
    y: Trace | Sequence[float] | np.ndarray,
    cfg: SolverConfig,
    beta0_grid: Sequence[float],
    *,
    engine: str = "fast",
) -> tuple[DeconvolutionResult, float]:
    """Solve over a grid of baselines, returning the best fit and its baseline.

    Objectives are comparable across baselines because each includes its own
    shifted residual term; ties go to the smaller baseline.
    """
    grid = list(beta0_grid)
    if not grid:
        raise ValueError("beta0 grid must be nonempty")
    best: DeconvolutionResult | None = None
    best_b0 = 0.0
    for b0 in sorted(grid):
        res = solve(y, replace(cfg, beta0=float(b0)), engine=engine)
        if best is None or res.objective < best.objective:
            best, best_b0 = res, float(b0)
    assert best is not None
    return best, best_b0


def max_region_count(result: DeconvolutionResult) -> int:
    """Largest per-timestep count of surviving changepoint regions."""
    return int(np.max(result.region_stats))


# ---------------------------------------------------------------------------
# reference engine


def _solve_reference(values, cfg, keep_cost_functions) -> DeconvolutionResult:
    gamma, lam, rho = cfg.gamma, cfg.lam, cfg.rho
    costs = [pw.CostFunction.single(pw.point_quadratic(values[0]), 0, rho)]
    for s in range(1, len(values)):
        prev = costs[-1]
        scaled = pw.prune_floor(pw.scale_argument(prev, gamma), rho)
        if cfg.constrained:
            branch = pw.add_quadratic(pw.running_min(scaled), pw.Quadratic(0.0, 0.0, lam))
        else:
            prev_min = pw.global_min(prev)[2]
            branch = pw.CostFunction.single(pw.Quadratic(0.0, 0.0, prev_min + lam), s, rho)
        merged = pw.pointwise_min(scaled, branch, s)
        costs.append(pw.add_quadratic(merged, pw.point_quadratic(values[s])))

    region_stats = np.array([len(f.labels()) for f in costs], dtype=np.int64)
    calcium, changepoints, objective = _decode_reference(costs, cfg)
    spikes = [(tau + 1, calcium[tau] - gamma * calcium[tau - 1]) for tau in changepoints]
    return DeconvolutionResult(
        changepoints=changepoints,
        spikes=spikes,
        calcium=calcium,
        objective=objective,
        region_stats=region_stats,
        config=cfg,
        cost_functions=costs if keep_cost_functions else None,
    )


def _decode_reference(costs, cfg):
    T = len(costs)
    calcium = np.empty(T)
    changepoints: list[int] = []
    bound = INF
    s0 = T - 1
    objective = INF
    while True:
        label, arg, val = pw.min_up_to(costs[s0], bound if cfg.constrained else INF)
        if s0 == T - 1:
            objective = val
        calcium[s0] = arg
        for t in range(s0 - 1, label - 1, -1):
            calcium[t] = calcium[t + 1] / cfg.gamma
        if label == 0:
            break
        changepoints.append(label)
        bound = calcium[label] / cfg.gamma
        s0 = label - 1
    changepoints.reverse()
    return calcium, changepoints, objective


# ---------------------------------------------------------------------------
# fast engine


# Storing every step's cost function is wasteful at scale; keep one
# checkpoint per this many steps and replay the gaps during decode.
CHECKPOINT_EVERY = 32


def _solve_fast(values, cfg, keep_cost_functions) -> DeconvolutionResult:
    chk_every = 1 if keep_cost_functions else CHECKPOINT_EVERY
    st_lo, st_a, st_b, st_c, st_lab, chk_steps, chk_off, nreg = _engine.forward(
        values, cfg.gamma, cfg.lam, cfg.rho, cfg.constrained, chk_every
    )
    calcium, cps, objective = _engine.decode(
        values, st_lo, st_a, st_b, st_c, st_lab, chk_steps, chk_off,
        cfg.gamma, cfg.lam, cfg.rho, cfg.constrained,
    )
    changepoints = [int(t) for t in cps]
    spikes = [
        (tau + 1, float(calcium[tau] - cfg.gamma * calcium[tau - 1]))
        for tau in changepoints
    ]
    cost_functions = None
    if keep_cost_functions:
        cost_functions = []
        for s in range(len(values)):
            o, e = int(chk_off[s]), int(chk_off[s + 1])
            pieces = []
            for i in range(o, e):
                hi = st_lo[i + 1] if i + 1 < e else INF
                quad = pw.Quadratic(st_a[i], st_b[i], st_c[i])
                pieces.append(pw.CostPiece(st_lo[i], hi, quad, int(st_lab[i])))
            cost_functions.append(pw.CostFunction(tuple(pieces), cfg.rho))
    return DeconvolutionResult(
        changepoints=changepoints,
        spikes=spikes,
        calcium=calcium,
        objective=float(objective),
        region_stats=nreg,
        config=cfg,
        cost_functions=cost_functions,
    )
