"""Spike-train comparison measures: van Rossum, Victor-Purpura, bin correlation.

Conventions, since several exist in the literature:

* van Rossum uses the causal exponential kernel and is normalized so that one
  unpaired spike costs 1/sqrt(2); the squared distance has the closed form
  0.5 * [sum_AA + sum_BB - 2 sum_AB] of exp(-|dt|/tau) over spike pairs.
* Victor-Purpura charges 1 per insertion/deletion and q per second of shift
  (so shifts beyond 2/q are never worthwhile).
* The correlation measure is the Pearson correlation of spike counts in
  fixed-width bins; a zero-variance count vector makes it degenerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit


@dataclass(frozen=True)
class SpikeTrain:
    """Sorted event times in seconds."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        if times.ndim != 1:
            raise ValueError("spike times must be one-dimensional")
        if times.size and not np.all(np.isfinite(times)):
            raise ValueError("spike times must be finite")
        if np.any(np.diff(times) < 0):
            raise ValueError("spike times must be sorted")

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class MetricParams:
    vr_tau: float = 0.1
    vp_q: float = 10.0
    corr_bin: float = 0.04

    def __post_init__(self):
        if min(self.vr_tau, self.vp_q, self.corr_bin) <= 0.0:
            raise ValueError("metric parameters must be strictly positive")


def as_spike_train(times: SpikeTrain | Sequence[float] | np.ndarray) -> SpikeTrain:
    if isinstance(times, SpikeTrain):
        return times
    return SpikeTrain(np.asarray(times, dtype=np.float64))


def _pair_sum(s: np.ndarray, t: np.ndarray, tau: float) -> float:
    if s.size == 0 or t.size == 0:
        return 0.0
    return float(np.exp(-np.abs(np.subtract.outer(s, t)) / tau).sum())


def van_rossum(a, b, vr_tau: float = 0.1) -> float:
    """Distance between the trains' causal-exponential filterings."""
    if vr_tau <= 0.0:
        raise ValueError("vr_tau must be positive")
    ta, tb = as_spike_train(a).times, as_spike_train(b).times
    d2 = 0.5 * (
        _pair_sum(ta, ta, vr_tau) + _pair_sum(tb, tb, vr_tau) - 2.0 * _pair_sum(ta, tb, vr_tau)
    )
    return math.sqrt(max(d2, 0.0))


@njit(cache=True)
def _vp_dp(ta, tb, q):
    n, m = ta.shape[0], tb.shape[0]
    prev = np.empty(m + 1)
    cur = np.empty(m + 1)
    for j in range(m + 1):
        prev[j] = j
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            shift = prev[j - 1] + q * abs(ta[i - 1] - tb[j - 1])
            ins = cur[j - 1] + 1.0
            dele = prev[j] + 1.0
            best = shift
            if ins < best:
                best = ins
            if dele < best:
                best = dele
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m]


def victor_purpura(a, b, vp_q: float = 10.0) -> float:
    """Minimal edit cost: insert/delete 1, shift q per second."""
    if vp_q <= 0.0:
        raise ValueError("vp_q must be positive")
    ta, tb = as_spike_train(a).times, as_spike_train(b).times
    if ta.size == 0:
        return float(tb.size)
    if tb.size == 0:
        return float(ta.size)
    return float(_vp_dp(ta, tb, vp_q))


class BinnedCorrelation(NamedTuple):
    value: float
    degenerate: bool

    def __float__(self) -> float:
        return self.value


def binned_correlation(a, b, corr_bin: float = 0.04, horizon: float | None = None) -> BinnedCorrelation:
    """Pearson correlation of per-bin spike counts over [0, horizon].

    Returns 0 with the degenerate flag set when either count vector has no
    variance (for instance an empty train).
    """
    if corr_bin <= 0.0:
        raise ValueError("corr_bin must be positive")
    ta, tb = as_spike_train(a).times, as_spike_train(b).times
    latest = max(ta[-1] if ta.size else 0.0, tb[-1] if tb.size else 0.0)
    if horizon is None:
        horizon = latest + corr_bin
    if horizon < latest:
        raise ValueError("horizon must cover both spike trains")
    nbins = max(1, int(math.ceil(horizon / corr_bin)))
    edges = np.linspace(0.0, nbins * corr_bin, nbins + 1)
    ca, _ = np.histogram(ta, bins=edges)
    cb, _ = np.histogram(tb, bins=edges)
    if ca.std() == 0.0 or cb.std() == 0.0:
        return BinnedCorrelation(0.0, True)
    value = float(np.corrcoef(ca, cb)[0, 1])
    return BinnedCorrelation(value, False)
