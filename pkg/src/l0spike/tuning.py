"""Train/test protocol for picking the spike penalty against a spike metric.

The trace's first half trains, the second half tests. For every penalty in
the grid the train half is deconvolved and the estimated train spikes are
scored against the ground truth; the best penalty (smallest distance or
largest correlation, ties to the smaller penalty) is then evaluated once on
the test half.

Decay rates come from the indicator's speed class: gamma = 1 - dt / phi with
phi = 0.7 s (fast), 1.25 s (medium), or 2 s (slow).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .metrics import MetricParams, SpikeTrain, as_spike_train, binned_correlation, van_rossum, victor_purpura
from .solver import SolverConfig, Trace, solve

_PHI = {"fast": 0.7, "medium": 1.25, "slow": 2.0}

METRICS = ("vr", "vp", "corr")


@dataclass(frozen=True)
class IndicatorClass:
    """Calcium indicator speed class and its time-scale parameter (seconds)."""

    name: str
    phi: float

    def __post_init__(self):
        if self.name not in _PHI:
            raise ValueError(f"unknown indicator class {self.name!r}")
        if self.phi != _PHI[self.name]:
            raise ValueError(f"{self.name} indicators have phi={_PHI[self.name]}")

    @classmethod
    def from_name(cls, name: str) -> "IndicatorClass":
        return cls(name, _PHI[name])


FAST = IndicatorClass.from_name("fast")
MEDIUM = IndicatorClass.from_name("medium")
SLOW = IndicatorClass.from_name("slow")


def gamma_from_rate(frame_rate: float, indicator: IndicatorClass) -> float:
    """Per-timestep decay for a given frame rate and indicator speed."""
    if frame_rate <= 0.0:
        raise ValueError("frame rate must be positive")
    gamma = 1.0 - (1.0 / frame_rate) / indicator.phi
    if gamma <= 0.0:
        raise ValueError(
            f"frame rate {frame_rate} is too slow for phi={indicator.phi}"
        )
    return gamma


def split_train_test(y: Trace, truth: SpikeTrain):
    """First floor(T/2) timesteps train, the rest test.

    Ground-truth spikes are partitioned by time with the boundary timestep
    going to the train half; test spike times are re-referenced to the test
    window's origin.
    """
    if len(y) < 2:
        raise ValueError("need at least two samples to split")
    truth = as_spike_train(truth)
    m = len(y) // 2
    cut = m / y.rate  # first test timestep (m+1) sits exactly here
    train_trace = Trace(y.values[:m], y.rate)
    test_trace = Trace(y.values[m:], y.rate)
    train_truth = SpikeTrain(truth.times[truth.times < cut])
    reref = truth.times[truth.times >= cut] - cut
    # the subtraction knocks sample-aligned times off the grid by float
    # round-off; snap anything within a millionth of a sample back so that
    # matching index sets still score an exact zero
    samples = reref * y.rate
    snapped = np.round(samples)
    on_grid = np.abs(samples - snapped) <= 1e-6
    reref = np.where(on_grid, snapped / y.rate, reref)
    test_truth = SpikeTrain(reref)
    return (train_trace, train_truth), (test_trace, test_truth)


def spikes_to_seconds(spike_times: list[int], rate: float) -> np.ndarray:
    """1-based spike timesteps to seconds; timestep 1 is time zero."""
    return (np.asarray(spike_times, dtype=np.float64) - 1.0) / rate


def default_lambda_grid(values, n: int = 50) -> np.ndarray:
    """Log-spaced penalties spanning [1e-4, 1e2] times the trace variance."""
    scale = float(np.var(values)) or 1.0
    return scale * np.logspace(-4.0, 2.0, n)


@dataclass(frozen=True)
class TuneRow:
    lam: float
    train_score: float
    train_spike_count: int


@dataclass(frozen=True)
class TuneReport:
    metric: str
    rows: tuple[TuneRow, ...]
    chosen_lam: float
    test_score: float
    test_spike_count: int
    gamma: float

    def to_csv(self) -> str:
        lines = ["lambda,train_score,train_spike_count"]
        for r in self.rows:
            lines.append(f"{r.lam!r},{r.train_score!r},{r.train_spike_count}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "metric": self.metric,
            "gamma": self.gamma,
            "chosen_lambda": self.chosen_lam,
            "test_score": self.test_score,
            "test_spike_count": self.test_spike_count,
            "grid_size": len(self.rows),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _score(est_seconds, truth: SpikeTrain, metric: str, params: MetricParams, horizon: float) -> float:
    if metric == "vr":
        return van_rossum(est_seconds, truth, params.vr_tau)
    if metric == "vp":
        return victor_purpura(est_seconds, truth, params.vp_q)
    if metric == "corr":
        return binned_correlation(est_seconds, truth, params.corr_bin, horizon).value
    raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")


def tune_lambda(
    y: Trace,
    truth: SpikeTrain,
    lam_grid,
    metric: str,
    params: MetricParams,
    cfg: SolverConfig,
) -> TuneReport:
    """Grid-search the spike penalty on the train half, score the test half."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    grid = [float(v) for v in lam_grid]
    if not grid:
        raise ValueError("lambda grid must be nonempty")
    (train, train_truth), (test, test_truth) = split_train_test(y, as_spike_train(truth))
    maximize = metric == "corr"

    rows = []
    horizon = len(train) / y.rate
    for lam in grid:
        res = solve(train, replace(cfg, lam=lam))
        est = spikes_to_seconds(res.spike_times, y.rate)
        score = _score(est, train_truth, metric, params, horizon)
        rows.append(TuneRow(lam=lam, train_score=score, train_spike_count=len(res.spikes)))

    chosen = rows[0]
    for row in rows[1:]:
        better = row.train_score > chosen.train_score if maximize else row.train_score < chosen.train_score
        if better or (row.train_score == chosen.train_score and row.lam < chosen.lam):
            chosen = row

    test_res = solve(test, replace(cfg, lam=chosen.lam))
    est = spikes_to_seconds(test_res.spike_times, y.rate)
    test_score = _score(est, test_truth, metric, params, len(test) / y.rate)
    return TuneReport(
        metric=metric,
        rows=tuple(rows),
        chosen_lam=chosen.lam,
        test_score=test_score,
        test_spike_count=len(test_res.spikes),
        gamma=cfg.gamma,
    )
