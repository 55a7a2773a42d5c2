"""Run artifacts: moments.csv, samples.csv, report.json.

Every file is written to a temporary sibling and renamed into place, so
an aborted run never leaves a torn file behind.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .costs import MB, PriceSheet, estimate_cost, extrapolate_serial, speedup
from .stats import std_of


def atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def _fmt(x):
    return repr(float(x))


def moments_csv(merged):
    acc = merged.channel_moments
    mean = np.atleast_1d(acc.mean)
    std = np.atleast_1d(std_of(acc)) if acc.count >= 2 else np.full(mean.shape, np.nan)
    times = merged.channel_times
    if times is None:
        times = np.zeros(mean.shape)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["channel_index", "time", "mean", "std"])
    for i, (t, m, s) in enumerate(zip(times, mean, std)):
        w.writerow([i, _fmt(t), _fmt(m), _fmt(s)])
    return buf.getvalue()


def samples_csv(samples):
    buf = io.StringIO()
    buf.write("sample\n")
    for x in samples:
        buf.write(_fmt(x) + "\n")
    return buf.getvalue()


def moments_checksum(acc):
    h = hashlib.sha256()
    h.update(str(acc.count).encode())
    h.update(np.ascontiguousarray(acc.mean).tobytes())
    h.update(np.ascontiguousarray(acc.m2).tobytes())
    return h.hexdigest()


def build_report(merged, config, prices=None):
    prices = prices or PriceSheet()
    timing = merged.timing
    report = {
        "problem": config.problem.name,
        "base_seed": config.base_seed,
        "n_mc": config.n_mc,
        "n_serial": config.n_serial,
        "n_tasks": config.n_tasks,
        "n_workers": config.n_workers,
        "requeued_tasks": merged.requeued,
        "discarded_duplicates": merged.discarded,
        "moments_sha256": moments_checksum(merged.channel_moments),
        "storage": {
            "intermediate_bytes": merged.intermediate_bytes,
            "intermediate_mb": merged.intermediate_bytes / MB,
            "merged_bytes": merged.storage_bytes,
            "merged_mb": merged.storage_bytes / MB,
        },
    }
    if timing is not None:
        report["timing_ms"] = timing.to_dict()
        walls = merged.task_wall_times
        if walls and timing.total_ms > 0:
            avg_ms = 1e3 * sum(walls) / len(walls)
            serial_ms = extrapolate_serial(avg_ms, config.n_tasks) if avg_ms > 0 else 0.0
            report["serial_extrapolated_ms"] = serial_ms
            report["speedup"] = speedup(serial_ms, timing.total_ms)
        report["estimated_cost"] = estimate_cost(
            timing, merged.intermediate_bytes, merged.storage_bytes, prices)
    return report


def write_outputs(merged, config, out_dir, prices=None):
    """Write the three run artifacts and return the report dictionary."""
    out = Path(out_dir)
    atomic_write(out / "moments.csv", moments_csv(merged))
    atomic_write(out / "samples.csv", samples_csv(merged.tracked_samples))
    report = build_report(merged, config, prices)
    atomic_write(out / "report.json", json.dumps(report, indent=2) + "\n")
    return report
