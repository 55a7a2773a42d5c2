"""Convergence and speedup studies built on top of the engine."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .costs import speedup
from .engine import merge, process, run, split
from .errors import ConfigError, InvarianceViolation
from .io import atomic_write, moments_checksum, moments_csv
from .stats import (
    build_histogram,
    mean_of,
    normalize_samples,
    pdf_residue,
    series_report,
    std_of,
)


def check_quadrupling(n_list, n_serial):
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ConfigError("n_list is empty")
    for small, large in zip(n_list, n_list[1:]):
        if large != 4 * small:
            raise ConfigError(f"n_list must quadruple at each step; got {small} -> {large}")
    for n in n_list:
        if n % n_serial:
            raise ConfigError(f"n={n} is not a multiple of n_serial={n_serial}")
    return n_list


@dataclass
class ConvergenceStudy:
    n_list: list
    histograms: dict
    merged: dict
    pdf_residues: list = field(default_factory=list)
    mean_residues: list = field(default_factory=list)
    std_residues: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n_list": self.n_list,
            "pdf": [r.to_dict() for r in self.pdf_residues],
            "mean": [r.to_dict() for r in self.mean_residues],
            "std": [r.to_dict() for r in self.std_residues],
            "converged": bool(self.pdf_residues) and self.pdf_residues[-1].converged,
        }

    def write(self, out_dir):
        out = Path(out_dir)
        for n in self.n_list:
            atomic_write(out / f"pdf_n{n}.csv", self.histograms[n].to_csv())
            atomic_write(out / f"moments_n{n}.csv", moments_csv(self.merged[n]))
        atomic_write(out / "residues.json", json.dumps(self.to_dict(), indent=2) + "\n")


def convergence_study(config, n_list, tolerance=0.05):
    """Successive n / 4n comparisons of the tracked-sample PDF and moments.

    One campaign with the largest n is processed; the n-run for every
    smaller n is the merge of its leading ``n / n_serial`` tasks, which is
    bit-identical to running that campaign on its own with the same seed.
    """
    n_list = check_quadrupling(n_list, config.n_serial)
    big = replace(config, n_mc=n_list[-1])
    queue = process(big, split(big))
    results = sorted(queue.results(), key=lambda r: r.task_index)
    del queue

    histograms, merged = {}, {}
    for n in n_list:
        cfg = replace(config, n_mc=n)
        m = merge(results[: cfg.n_tasks], cfg)
        merged[n] = m
        histograms[n] = build_histogram(normalize_samples(m.tracked_samples),
                                        config.histogram_spec)
    study = ConvergenceStudy(n_list, histograms, merged)
    for small, large in zip(n_list, n_list[1:]):
        a, b = merged[small].channel_moments, merged[large].channel_moments
        study.pdf_residues.append(pdf_residue(histograms[small], histograms[large], tolerance))
        study.mean_residues.append(
            series_report("mean", mean_of(a), mean_of(b), small, large, tolerance))
        study.std_residues.append(
            series_report("std", std_of(a), std_of(b), small, large, tolerance))
    return study


@dataclass
class SpeedupRow:
    workers: int
    total_ms: float
    process_ms: float
    speedup: float
    checksum: str


def speedup_study(config, worker_list):
    """Repeat one campaign per worker count; speedup is relative to one worker."""
    worker_list = [int(w) for w in worker_list]
    if not worker_list or min(worker_list) < 1:
        raise ConfigError("worker_list must be non-empty with entries >= 1")
    runs = {}
    for w in sorted(set(worker_list) | {1}):
        runs[w] = run(replace(config, n_workers=w))
    reference = runs[1].timing.total_ms
    rows = []
    for w in worker_list:
        m = runs[w]
        rows.append(SpeedupRow(w, m.timing.total_ms, m.timing.process_ms,
                               speedup(reference, m.timing.total_ms),
                               moments_checksum(m.channel_moments)))
    sums = {r.checksum for r in rows} | {moments_checksum(runs[1].channel_moments)}
    if len(sums) != 1:
        raise InvarianceViolation("merged moments differ across worker counts")
    return rows


def speedup_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["workers", "total_ms", "speedup", "process_ms", "moments_sha256"])
    for r in rows:
        w.writerow([r.workers, f"{r.total_ms:.3f}", f"{r.speedup:.4f}",
                    f"{r.process_ms:.3f}", r.checksum])
    return buf.getvalue()
