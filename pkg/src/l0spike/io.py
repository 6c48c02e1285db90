"""File formats: trace CSV, spike-time text, result JSON.

Trace CSV is one fluorescence value per line, or two columns ``time,value``
with uniform spacing (the spacing then determines the sampling rate). An
optional single header line is skipped. Spike files hold one time in seconds
per line, sorted. Results serialize to JSON with enough precision to
round-trip exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .metrics import SpikeTrain
from .solver import DeconvolutionResult, Trace

SPACING_RTOL = 1e-6


def read_trace(path, rate: float | None = None) -> Trace:
    """Parse a trace file; two-column files carry their own rate."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    rows = []
    for i, line in enumerate(lines):
        parts = [p.strip() for p in line.split(",") if p.strip() != ""]
        if not parts:
            continue
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            if i == 0:
                continue  # header
            raise ValueError(f"{path}: unparseable line {i + 1}: {line!r}")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if widths == {1}:
        values = np.array([r[0] for r in rows])
        return Trace(values, rate if rate is not None else 100.0)
    if widths == {2}:
        times = np.array([r[0] for r in rows])
        values = np.array([r[1] for r in rows])
        if len(times) >= 2:
            dt = np.diff(times)
            mean_dt = dt.mean()
            if mean_dt <= 0 or np.any(np.abs(dt - mean_dt) > SPACING_RTOL * abs(mean_dt)):
                raise ValueError(f"{path}: two-column trace requires uniform time spacing")
            inferred = 1.0 / mean_dt
        else:
            inferred = 100.0
        return Trace(values, rate if rate is not None else inferred)
    raise ValueError(f"{path}: expected one or two columns on every line")


def write_trace(path, trace: Trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in trace.values:
            fh.write(f"{float(v)!r}\n")


def read_spikes(path) -> SpikeTrain:
    """One spike time (seconds) per line, sorted."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    times = [float(line.strip()) for line in lines if line.strip()]
    return SpikeTrain(np.array(times))


def write_spikes(path, times) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in np.asarray(times, dtype=np.float64):
            fh.write(f"{float(t)!r}\n")


def result_to_dict(
    result: DeconvolutionResult, rate: float = 100.0, include_calcium: bool = True
) -> dict:
    cfg = result.config
    out = {
        "spikes": [
            {"index": t, "time_s": (t - 1) / rate, "magnitude": z}
            for t, z in result.spikes
        ],
        "changepoints": list(result.changepoints),
        "objective": result.objective,
        "config": {
            "gamma": cfg.gamma,
            "lambda": cfg.lam,
            "beta0": cfg.beta0,
            "constrained": cfg.constrained,
            "rho": cfg.rho,
        },
        "max_regions": int(np.max(result.region_stats)) if len(result.region_stats) else 0,
    }
    if include_calcium:
        out["calcium"] = [float(v) for v in result.calcium]
    return out


def write_result(path, result: DeconvolutionResult, rate: float = 100.0,
                 include_calcium: bool = True) -> None:
    payload = result_to_dict(result, rate=rate, include_calcium=include_calcium)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def canonical_json(obj) -> str:
    """Deterministic serialization used to compare results across interfaces."""
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError("non-finite value in result")
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
