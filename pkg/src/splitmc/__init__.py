"""Parallel Monte Carlo with a split / process / merge pipeline.

Tasks of ``n_serial`` realizations are leased from a fault-tolerant queue
by worker threads, each task draws from its own counter-based random
stream, and per-task moment accumulators are merged pairwise.
"""
from .bar import BarConfig, assemble, newmark_solve, nonlinear_force, simulate_realization
from .costs import PriceSheet, TimingBreakdown, estimate_cost, extrapolate_serial, speedup
from .engine import FaultPlan, MergedResult, RunConfig, TaskQueue, merge, run, split
from .problems import BarProblem, ToyDigitSquare
from .rng import GammaParams, derive_stream, sample_gamma, sample_white_noise
from .stats import (
    HistogramSpec,
    MomentAccumulator,
    build_histogram,
    mean_of,
    normalize_samples,
    pdf_residue,
    series_residue,
    std_of,
    welford_merge,
    welford_update,
)

__version__ = "0.1.0"
