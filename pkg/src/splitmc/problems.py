"""Problems the engine can run: the digit-square toy and the stochastic bar.

A problem turns ``n`` realizations drawn from one task stream into a
per-channel :class:`MomentAccumulator` plus the tracked scalar samples.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .bar import BarConfig, simulate_realization
from .errors import ProblemError, SplitMCError
from .stats import MomentAccumulator, welford_update


@numba.njit(cache=True, nogil=True)
def _busy(iterations, seed):
    # xorshift loop; the returned value keeps the compiler from dropping it
    x = np.uint64(seed) | np.uint64(1)
    for _ in range(iterations):
        x ^= x << np.uint64(13)
        x ^= x >> np.uint64(7)
        x ^= x << np.uint64(17)
    return x


@dataclass(frozen=True)
class ToyDigitSquare:
    """Square of a uniform random digit 0..9.

    ``busy_iterations`` adds GIL-free CPU work per task for scaling studies.
    """

    busy_iterations: int = 0
    name = "toy"

    @property
    def n_channels(self):
        return 1

    def channel_times(self):
        return np.zeros(1)

    def run_task(self, n, stream, task_index=0):
        digits = stream.integers(0, 10, size=n)
        values = (digits * digits).astype(float)
        if self.busy_iterations:
            _busy(self.busy_iterations, task_index)
        return MomentAccumulator.from_samples(values[:, None]), values


@dataclass(frozen=True)
class BarProblem:
    """Tip displacement of the random bar; one channel per time level."""

    bar: BarConfig = field(default_factory=BarConfig)
    name = "bar"

    @property
    def n_channels(self):
        return self.bar.n_steps + 1

    def channel_times(self):
        return self.bar.times

    def run_task(self, n, stream, task_index=0):
        acc = MomentAccumulator.empty(self.n_channels)
        tracked = np.empty(n)
        for r in range(n):
            try:
                sol = simulate_realization(self.bar, stream)
                acc = welford_update(acc, sol.tip_displacement)
            except SplitMCError as exc:
                raise ProblemError(str(exc), task_index, r) from exc
            tracked[r] = sol.final_tip
        return acc, tracked
