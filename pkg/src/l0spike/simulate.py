"""Synthetic fluorescence traces under the decaying-calcium generative model.

Spikes arrive as per-timestep Poisson counts, calcium decays geometrically
between them, and the observed trace adds a baseline and Gaussian noise:

    c_t = gamma * c_{t-1} + amplitude * counts_t        (c_0 = 0)
    y_t = beta0 + c_t + eps_t,   eps_t ~ N(0, sigma^2)

Randomness comes from a seeded PCG64 stream of uniforms pushed through fixed
deterministic transforms (inverse-CDF for the counts, Box-Muller for the
noise), so a seed pins the output bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SimulationConfig:
    T: int
    gamma: float
    beta0: float = 0.0
    sigma: float = 0.15
    theta: float = 0.01
    spike_amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.theta < 0.0:
            raise ValueError("theta must be nonnegative")


@dataclass(frozen=True)
class SimulatedTrace:
    """Observed values plus the ground truth that produced them."""

    y: np.ndarray
    c: np.ndarray
    spike_counts: np.ndarray

    @property
    def spike_times(self) -> list[int]:
        """1-based timesteps with at least one spike."""
        return [int(t) + 1 for t in np.nonzero(self.spike_counts)[0]]

    def spike_seconds(self, rate: float) -> np.ndarray:
        """Spike times in seconds at the given sampling rate."""
        return (np.asarray(self.spike_times, dtype=np.float64) - 1.0) / rate


def _poisson_cdf(theta: float) -> np.ndarray:
    """Cumulative Poisson probabilities, long enough to swallow the tail."""
    if theta == 0.0:
        return np.array([1.0])
    kmax = int(theta + 12.0 * math.sqrt(theta) + 30.0)
    pmf = math.exp(-theta)
    cdf = [pmf]
    for k in range(1, kmax + 1):
        pmf *= theta / k
        cdf.append(cdf[-1] + pmf)
        if 1.0 - cdf[-1] < 1e-16:
            break
    return np.array(cdf)


def _box_muller(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    r = np.sqrt(-2.0 * np.log(u1))
    return np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])


def generate(cfg: SimulationConfig) -> SimulatedTrace:
    """Draw one trace; identical seeds give identical output."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    T = cfg.T

    # one uniform per timestep -> spike count via the inverse CDF
    cdf = _poisson_cdf(cfg.theta)
    counts = np.searchsorted(cdf, rng.random(T), side="right").astype(np.int64)

    half = (T + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]: keeps the log finite
    u2 = rng.random(half)
    noise = _box_muller(u1, u2)[:T]

    c = np.empty(T)
    level = 0.0
    jumps = cfg.spike_amplitude * counts
    for t in range(T):
        level = cfg.gamma * level + jumps[t]
        c[t] = level
    y = cfg.beta0 + c + cfg.sigma * noise
    return SimulatedTrace(y=y, c=c, spike_counts=counts)
