"""Slow reference solvers used to verify the functional-pruning solver.

`op_solve` is the quadratic-time optimal-partitioning recursion over the last
changepoint position (unconstrained problem only). `exhaustive_solve`
enumerates every changepoint subset and, for the constrained problem, every
active set of the spike-nonnegativity constraints. Both respect the same
calcium floor `rho` as the main solver so objectives are directly comparable.

Segment indices are 1-based and inclusive, matching the timestep convention
of the solver's output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .solver import DeconvolutionResult, SolverConfig, Trace, _as_values

INF = math.inf

MAX_EXHAUSTIVE_T = 16


@dataclass(frozen=True)
class SegmentFit:
    """Least-squares decay fit to y[a..b] (1-based, inclusive).

    `alpha` is the fitted calcium at the segment end b; the fitted curve is
    alpha * gamma**(t - b).
    """

    a: int
    b: int
    alpha: float
    cost: float


def segment_cost(y, a: int, b: int, gamma: float) -> SegmentFit:
    """Closed-form best decay-curve fit over y[a..b].

    alpha = sum(y_t gamma^(t-b)) / sum(gamma^(2(t-b))), cost is half the
    squared residual. Computed anchored at the segment start so that long
    segments underflow gracefully instead of overflowing.
    """
    values = _as_values(y)
    T = len(values)
    if not 1 <= a <= b <= T:
        raise ValueError(f"need 1 <= a <= b <= {T}, got a={a}, b={b}")
    seg = values[a - 1 : b]
    w = gamma ** np.arange(b - a + 1, dtype=np.float64)
    beta = float(np.dot(seg, w) / np.dot(w, w))
    resid = seg - beta * w
    cost = 0.5 * float(np.dot(resid, resid))
    return SegmentFit(a=a, b=b, alpha=beta * gamma ** (b - a), cost=cost)


def _segment_tables(values, gamma, rho):
    """Floored fit tables for every interval [a, b], 1-based.

    Returns (cost, alpha_end, beta_start) as (T+1, T+1) arrays; entries with
    a > b are unused.
    """
    T = len(values)
    cost = np.full((T + 1, T + 1), np.nan)
    alpha_end = np.full((T + 1, T + 1), np.nan)
    beta_start = np.full((T + 1, T + 1), np.nan)
    for a in range(1, T + 1):
        A = B = S = 0.0
        for b in range(a, T + 1):
            w = gamma ** (b - a)
            yb = values[b - 1]
            A += yb * w
            B += w * w
            S += yb * yb
            beta = A / B
            beta_min = rho / w  # keeps the segment-end calcium above rho
            if beta < beta_min:
                beta = beta_min
            cost[a, b] = 0.5 * (S - 2.0 * beta * A + beta * beta * B)
            alpha_end[a, b] = beta * w
            beta_start[a, b] = beta
    return cost, alpha_end, beta_start


@njit(cache=True)
def _op_forward(y, gamma, lam, rho):
    T = y.shape[0]
    F = np.empty(T + 1)
    F[0] = -lam
    arg = np.zeros(T + 1, np.int64)
    for s in range(1, T + 1):
        # sweep segment start a = s..1 with running sums anchored at a
        A = 0.0
        B = 0.0
        S = 0.0
        beta_min = rho
        best = INF
        bestt = 0
        for a in range(s, 0, -1):
            ya = y[a - 1]
            A = ya + gamma * A
            B = 1.0 + gamma * gamma * B
            S = ya * ya + S
            if a < s:
                beta_min /= gamma
            if beta_min > 1e150:
                break  # segment too long to keep calcium above the floor
            beta = A / B
            if beta < beta_min:
                beta = beta_min
            D = 0.5 * (S - 2.0 * beta * A + beta * beta * B)
            cand = F[a - 1] + D + lam
            if cand < best:
                best = cand
                bestt = a - 1
        F[s] = best
        arg[s] = bestt
    return F, arg


def op_solve(y, cfg: SolverConfig) -> DeconvolutionResult:
    """Optimal partitioning over the last changepoint; O(T^2), unconstrained only."""
    if cfg.constrained:
        raise ValueError("op_solve handles only the unconstrained problem")
    values = _as_values(y) - cfg.beta0
    F, arg = _op_forward(values, cfg.gamma, cfg.lam, cfg.rho)
    T = len(values)
    changepoints = []
    s = T
    while s > 0:
        tau = int(arg[s])
        if tau > 0:
            changepoints.append(tau)
        s = tau
    changepoints.reverse()
    calcium = _fill_calcium(values, changepoints, cfg)
    spikes = [
        (tau + 1, float(calcium[tau] - cfg.gamma * calcium[tau - 1]))
        for tau in changepoints
    ]
    return DeconvolutionResult(
        changepoints=changepoints,
        spikes=spikes,
        calcium=calcium,
        objective=float(F[T]),
        region_stats=np.zeros(T, dtype=np.int64),
        config=cfg,
    )


def _fill_calcium(values, changepoints, cfg, merged_bounds=None):
    """Per-segment floored least-squares calcium path.

    `merged_bounds` overrides segment boundaries with chains (constrained
    active-set solutions where some spikes are pinned to zero).
    """
    T = len(values)
    bounds = merged_bounds
    if bounds is None:
        cuts = [0] + list(changepoints) + [T]
        bounds = list(zip(cuts[:-1], cuts[1:]))
    calcium = np.empty(T)
    for lo, hi in bounds:
        a, b = lo + 1, hi
        fit = segment_cost(values, a, b, cfg.gamma)
        beta = fit.alpha * cfg.gamma ** (a - b)
        beta_min = cfg.rho * cfg.gamma ** (a - b)
        beta = max(beta, beta_min)
        calcium[a - 1 : b] = beta * cfg.gamma ** np.arange(b - a + 1)
    return calcium


@njit(cache=True)
def _enum_unconstrained(cost, lam, T):
    best = INF
    best_mask = 0
    best_k = 0
    for mask in range(1 << (T - 1)):
        total = 0.0
        prev = 0
        k = 0
        for tau in range(1, T):
            if mask & (1 << (tau - 1)):
                total += cost[prev + 1, tau]
                prev = tau
                k += 1
        total += cost[prev + 1, T] + lam * k
        if total < best - 1e-12 or (total <= best + 1e-12 and k < best_k):
            best = total
            best_mask = mask
            best_k = k
    return best, best_mask


@njit(cache=True)
def _enum_constrained(cost, alpha_end, beta_start, gamma, lam, T):
    best = INF
    best_mask = 0
    best_sub = 0
    best_k = 0
    taus = np.empty(T + 1, np.int64)
    for mask in range(1 << (T - 1)):
        k = 0
        for tau in range(1, T):
            if mask & (1 << (tau - 1)):
                taus[k] = tau
                k += 1
        # active subsets pin the spike at tau to exactly zero, merging the
        # two adjacent segments into one decay curve
        sub = mask
        while True:
            total = lam * k
            feasible = True
            chain_lo = 0
            prev_end = -1.0
            jj = 0
            for j in range(k + 1):
                hi = taus[j] if j < k else T
                if j < k and (sub & (1 << (taus[j] - 1))) != 0:
                    continue  # junction is active: chain continues
                a = chain_lo + 1
                total += cost[a, hi]
                if prev_end >= 0.0:
                    slack = beta_start[a, hi] - gamma * prev_end
                    if slack < -1e-9 * (1.0 + abs(gamma * prev_end)):
                        feasible = False
                        break
                prev_end = alpha_end[a, hi]
                chain_lo = hi
                jj += 1
            if feasible and (
                total < best - 1e-12 or (total <= best + 1e-12 and k < best_k)
            ):
                best = total
                best_mask = mask
                best_sub = sub
                best_k = k
            if sub == 0:
                break
            sub = (sub - 1) & mask
    return best, best_mask, best_sub


def exhaustive_solve(y, cfg: SolverConfig) -> DeconvolutionResult:
    """Brute-force optimum over every changepoint subset; needs T <= 16."""
    values = _as_values(y) - cfg.beta0
    T = len(values)
    if T > MAX_EXHAUSTIVE_T:
        raise ValueError(f"exhaustive enumeration limited to T <= {MAX_EXHAUSTIVE_T}")
    cost, alpha_end, beta_start = _segment_tables(values, cfg.gamma, cfg.rho)
    if cfg.constrained:
        best, mask, sub = _enum_constrained(
            cost, alpha_end, beta_start, cfg.gamma, cfg.lam, T
        )
    else:
        best, mask = _enum_unconstrained(cost, cfg.lam, T)
        sub = 0
    changepoints = [tau for tau in range(1, T) if mask & (1 << (tau - 1))]
    # chains: segments joined across active (zero-magnitude) junctions
    cuts = [0] + [tau for tau in changepoints if not sub & (1 << (tau - 1))] + [T]
    bounds = list(zip(cuts[:-1], cuts[1:]))
    calcium = _fill_calcium(values, changepoints, cfg, merged_bounds=bounds)
    spikes = [
        (tau + 1, float(calcium[tau] - cfg.gamma * calcium[tau - 1]))
        for tau in changepoints
    ]
    return DeconvolutionResult(
        changepoints=changepoints,
        spikes=spikes,
        calcium=calcium,
        objective=float(best),
        region_stats=np.zeros(T, dtype=np.int64),
        config=cfg,
    )
