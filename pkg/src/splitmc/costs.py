"""Timing, speedup, storage and cost accounting for a campaign."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigError

MB = 1024 * 1024


@dataclass(frozen=True)
class TimingBreakdown:
    split_ms: float
    process_ms: float
    merge_ms: float
    total_ms: float
    n_tasks: int
    n_workers: int

    @classmethod
    def from_phases(cls, split_ms, process_ms, merge_ms, n_tasks, n_workers):
        return cls(split_ms, process_ms, merge_ms, split_ms + process_ms + merge_ms,
                   n_tasks, n_workers)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PriceSheet:
    """Prices per VM-hour, per MB-month stored and per MB sent out.

    Inbound transfer is free. ``billing`` is ``"hourly"`` (each worker is
    charged whole started hours) or ``"fractional"``.
    """

    vm_hour_price: float = 0.0
    storage_price: float = 0.0
    egress_price: float = 0.0
    storage_months: float = 1.0
    billing: str = "hourly"

    def __post_init__(self):
        for name in ("vm_hour_price", "storage_price", "egress_price", "storage_months"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.billing not in ("hourly", "fractional"):
            raise ConfigError("billing must be 'hourly' or 'fractional'")


def extrapolate_serial(avg_task_ms, n_tasks):
    """Serial campaign time estimated from the mean time of one task."""
    if avg_task_ms <= 0:
        raise ValueError("avg_task_ms must be positive")
    return avg_task_ms * n_tasks


def speedup(serial_ms, total_ms):
    if total_ms <= 0:
        raise ValueError("total_ms must be positive")
    return serial_ms / total_ms


def estimate_cost(breakdown, bytes_stored, bytes_egress, prices):
    hours = breakdown.total_ms / 3.6e6
    if prices.billing == "hourly":
        hours = math.ceil(hours)
    compute = breakdown.n_workers * hours * prices.vm_hour_price
    storage = bytes_stored / MB * prices.storage_price * prices.storage_months
    egress = bytes_egress / MB * prices.egress_price
    return compute + storage + egress


def storage_cost_row(n_mc, breakdown, bytes_stored, bytes_egress, prices):
    """One row of a space/cost table: realizations, space in MB, cost."""
    return {
        "n_mc": n_mc,
        "space_mb": bytes_stored / MB,
        "cost": estimate_cost(breakdown, bytes_stored, bytes_egress, prices),
    }


def measure_task_time(run_one_task, repetitions=10):
    """Average wall time in ms of ``run_one_task()`` over ``repetitions`` calls."""
    import time

    total = 0.0
    for _ in range(repetitions):
        t0 = time.perf_counter()
        run_one_task()
        total += time.perf_counter() - t0
    return 1e3 * total / repetitions


def physical_cores():
    """Physical cores usable by this process."""
    import os

    try:
        import psutil

        phys = psutil.cpu_count(logical=False)
    except ImportError:
        phys = None
    try:
        avail = len(os.sched_getaffinity(0))
    except AttributeError:
        avail = os.cpu_count() or 1
    return max(1, min(phys or avail, avail))
