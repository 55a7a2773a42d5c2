"""Storage-lean statistics.

Only the count, the mean and the centered sum of squares (``m2``) of each
output channel are kept per task. Accumulators are combined with the
pairwise update of Chan, Golub & LeVeque, so partial results coming from
different workers can be merged without ever touching the raw samples.

The ``mean`` and ``m2`` fields may be scalars or equally shaped numpy
arrays; in the latter case every element is an independent channel that
shares the same ``count`` (one channel per time step, for instance).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSample,
    InsufficientSamples,
    LengthMismatch,
    NonFiniteSample,
    SpecMismatch,
    ConfigError,
)


def _frozen(value):
    if isinstance(value, np.ndarray):
        value = value.copy()
        value.flags.writeable = False
        return value
    return float(value)


@dataclass(frozen=True, eq=False)
class MomentAccumulator:
    """Count, mean and centered sum of squares of a sample set."""

    count: int = 0
    mean: float | np.ndarray = 0.0
    m2: float | np.ndarray = 0.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "m2", _frozen(self.m2))

    @classmethod
    def empty(cls, n_channels=None):
        """Empty accumulator; ``n_channels`` selects the array-valued form."""
        if n_channels is None:
            return cls()
        return cls(0, np.zeros(n_channels), np.zeros(n_channels))

    @classmethod
    def from_samples(cls, samples, axis=0):
        """Exact two-pass accumulator of a batch (samples along ``axis``)."""
        x = np.atleast_1d(np.asarray(samples, dtype=float))
        if not np.all(np.isfinite(x)):
            raise NonFiniteSample("samples contain NaN or infinity")
        n = x.shape[axis]
        if n == 0:
            shape = x.shape[:axis] + x.shape[axis + 1:]
            return cls.empty(shape if shape else None)
        mean = x.mean(axis=axis)
        m2 = ((x - np.expand_dims(mean, axis)) ** 2).sum(axis=axis)
        if np.ndim(mean) == 0:
            return cls(n, float(mean), float(m2))
        return cls(n, mean, m2)

    @property
    def n_channels(self):
        return None if np.ndim(self.mean) == 0 else np.size(self.mean)

    @property
    def nbytes(self):
        """Serialized payload size: count plus mean and m2 as float64."""
        return 8 + 2 * 8 * (self.n_channels or 1)

    def identical(self, other):
        """Bit-for-bit equality."""
        return (
            self.count == other.count
            and np.asarray(self.mean).tobytes() == np.asarray(other.mean).tobytes()
            and np.asarray(self.m2).tobytes() == np.asarray(other.m2).tobytes()
        )

    def __eq__(self, other):
        if not isinstance(other, MomentAccumulator):
            return NotImplemented
        return self.identical(other)

    __hash__ = None


def welford_update(acc, x):
    """Add one observation ``x`` (scalar or per-channel array) to ``acc``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample(f"non-finite sample {x!r}")
    n = acc.count + 1
    delta = x - acc.mean
    mean = acc.mean + delta / n
    m2 = acc.m2 + delta * (x - mean)
    if np.ndim(mean) == 0:
        return MomentAccumulator(n, float(mean), float(m2))
    return MomentAccumulator(n, mean, m2)


def welford_fold(samples):
    acc = MomentAccumulator()
    for x in samples:
        acc = welford_update(acc, x)
    return acc


def welford_merge(a, b):
    """Pairwise combination of two accumulators; the empty one is the identity."""
    if b.count == 0:
        return a
    if a.count == 0:
        return b
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * (b.count / n)
    m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / n)
    if np.ndim(mean) == 0:
        return MomentAccumulator(n, float(mean), float(m2))
    return MomentAccumulator(n, mean, m2)


def merge_tree(accumulators):
    """Merge a sequence with a balanced binary tree in the given order.

    The reduction shape depends only on the sequence length, so the same
    ordered inputs always produce bit-identical output.
    """
    accs = list(accumulators)
    if not accs:
        return MomentAccumulator()
    while len(accs) > 1:
        paired = [welford_merge(accs[i], accs[i + 1]) for i in range(0, len(accs) - 1, 2)]
        if len(accs) % 2:
            paired.append(accs[-1])
        accs = paired
    return accs[0]


def mean_of(acc):
    if acc.count < 1:
        raise InsufficientSamples("mean needs at least one sample")
    return acc.mean


def variance_of(acc):
    """Unbiased (n - 1) sample variance."""
    if acc.count < 2:
        raise InsufficientSamples("standard deviation needs at least two samples")
    return acc.m2 / (acc.count - 1)


def std_of(acc):
    return np.sqrt(variance_of(acc)) if acc.n_channels else math.sqrt(variance_of(acc))


def normalize_samples(samples):
    """Shift and scale samples to zero mean and unit (unbiased) std."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InsufficientSamples("normalization needs at least two samples")
    acc = MomentAccumulator.from_samples(x)
    std = std_of(acc)
    if std == 0.0:
        raise DegenerateSample("samples have zero variance")
    return (x - acc.mean) / std


@dataclass(frozen=True)
class HistogramSpec:
    lower_edge: float = -5.0
    upper_edge: float = 5.0
    n_bins: int = 100

    def __post_init__(self):
        if not self.lower_edge < self.upper_edge:
            raise ConfigError("histogram lower_edge must be below upper_edge")
        if self.n_bins < 1:
            raise ConfigError("histogram needs at least one bin")

    @property
    def bin_width(self):
        return (self.upper_edge - self.lower_edge) / self.n_bins

    @property
    def edges(self):
        return np.linspace(self.lower_edge, self.upper_edge, self.n_bins + 1)

    @property
    def centers(self):
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])


@dataclass(frozen=True, eq=False)
class Histogram:
    spec: HistogramSpec
    density: np.ndarray
    n_total: int
    n_out_of_range: int

    @property
    def mass(self):
        return float(self.density.sum() * self.spec.bin_width)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_center", "density"])
        for c, d in zip(self.spec.centers, self.density):
            w.writerow([repr(float(c)), repr(float(d))])
        return buf.getvalue()


def build_histogram(samples, spec):
    """Normalized histogram; samples outside the range are tallied, not clamped.

    Bins are half-open ``[e_i, e_{i+1})`` except the last, which is closed.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample("histogram samples must be finite")
    counts, _ = np.histogram(x, bins=spec.n_bins, range=(spec.lower_edge, spec.upper_edge))
    n_total = x.size
    n_out = n_total - int(counts.sum())
    if n_total == 0:
        density = np.zeros(spec.n_bins)
    else:
        density = counts / (n_total * spec.bin_width)
    return Histogram(spec, density, n_total, n_out)


@dataclass(frozen=True)
class ResidueReport:
    quantity: str  # "pdf", "mean" or "std"
    n_small: int
    n_large: int
    residue: float
    tolerance: float
    converged: bool
    series: Sequence[float] | None = field(default=None, repr=False)

    def to_dict(self):
        d = asdict(self)
        if self.series is not None:
            d["series"] = [float(v) for v in self.series]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def pdf_residue(h_small, h_large, tolerance=0.05):
    """Sup-norm distance between two density estimates on identical bins."""
    if h_small.spec != h_large.spec:
        raise SpecMismatch(f"{h_small.spec} != {h_large.spec}")
    r = float(np.max(np.abs(h_large.density - h_small.density)))
    return ResidueReport("pdf", h_small.n_total, h_large.n_total, r, tolerance, r < tolerance)


def series_residue(stat_small, stat_large):
    """Pointwise absolute difference of two statistic time series."""
    a = np.asarray(stat_small, dtype=float)
    b = np.asarray(stat_large, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"series lengths differ: {a.shape} vs {b.shape}")
    return np.abs(b - a)


def series_report(quantity, stat_small, stat_large, n_small, n_large, tolerance=0.05):
    series = series_residue(stat_small, stat_large)
    r = float(series.max()) if series.size else 0.0
    return ResidueReport(quantity, n_small, n_large, r, tolerance, r < tolerance, series)
