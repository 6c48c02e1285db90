"""L0-penalized spike deconvolution of calcium fluorescence traces."""

from .solver import (
    DeconvolutionResult,
    SolverConfig,
    Trace,
    max_region_count,
    solve,
    solve_with_intercept,
)

__all__ = [
    "DeconvolutionResult",
    "SolverConfig",
    "Trace",
    "max_region_count",
    "solve",
    "solve_with_intercept",
]

__version__ = "0.1.0"
