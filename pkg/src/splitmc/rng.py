"""Per-task random streams and the samplers used by the bar problem.

Every task owns a Philox4x64 counter-based generator. The 128-bit key is
the run's ``base_seed`` and the task index occupies the upper half of the
256-bit counter, so each task walks its own block of 2**128 counter
values: streams of distinct tasks cannot overlap, no matter how many
numbers a task draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams

_U64 = 1 << 64


@dataclass(frozen=True)
class StreamId:
    base_seed: int
    task_index: int

    def __post_init__(self):
        if not (0 <= self.base_seed < _U64 and 0 <= self.task_index < _U64):
            raise InvalidParams("base_seed and task_index must be unsigned 64-bit integers")

    @property
    def value(self):
        """Opaque 128-bit identifier."""
        return (self.base_seed << 64) | self.task_index


def derive_stream(base_seed, task_index):
    """Deterministic generator for ``(base_seed, task_index)``."""
    sid = StreamId(int(base_seed), int(task_index))
    bitgen = np.random.Philox(key=sid.base_seed, counter=sid.task_index << 128)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class GammaParams:
    """Max-entropy law of a positive variable with known mean.

    ``mu`` is the mean and ``delta`` the coefficient of variation, giving
    shape ``1/delta**2`` and scale ``delta**2 * mu``.
    """

    mu: float
    delta: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise InvalidParams(f"gamma mean must be positive, got {self.mu}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise InvalidParams(f"dispersion factor must be positive, got {self.delta}")

    @property
    def shape(self):
        return 1.0 / self.delta**2

    @property
    def scale(self):
        return self.delta**2 * self.mu


def gamma_pdf(x, params):
    """Closed-form density, zero outside (0, inf)."""
    x = np.asarray(x, dtype=float)
    a = params.shape
    out = np.zeros_like(x)
    pos = x > 0
    r = x[pos] / params.mu
    log_p = (a * math.log(a) - math.lgamma(a) - math.log(params.mu)
             + (a - 1.0) * np.log(r) - a * r)
    out[pos] = np.exp(log_p)
    return out


def _standard_gamma_batch(stream, a, n):
    # Marsaglia & Tsang (2000) squeeze/rejection for shape >= 1.
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = n - filled
        batch = max(16, int(m * 1.1) + 8)
        z = stream.standard_normal(batch)
        u = stream.random(batch)
        v = (1.0 + c * z) ** 3
        ok = v > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = ok & (
                (u < 1.0 - 0.0331 * z**4)
                | (np.log(u) < 0.5 * z * z + d * (1.0 - v + np.log(np.where(ok, v, 1.0))))
            )
        vals = (d * v)[accept][:m]
        out[filled:filled + vals.size] = vals
        filled += vals.size
    return out


def _standard_gamma_scalar(stream, a):
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        z = stream.standard_normal()
        v = (1.0 + c * z) ** 3
        if v <= 0:
            continue
        u = stream.random()
        if u < 1.0 - 0.0331 * z**4:
            return d * v
        if u > 0 and math.log(u) < 0.5 * z * z + d * (1.0 - v + math.log(v)):
            return d * v


def sample_gamma(stream, params, size=None):
    """Draw from Gamma(shape=1/delta**2, scale=delta**2*mu).

    Shapes below one use the boost ``G(a) = G(a + 1) * U**(1/a)``.
    """
    if not isinstance(params, GammaParams):
        raise InvalidParams("params must be GammaParams")
    a = params.shape
    boost = a < 1.0
    a_eff = a + 1.0 if boost else a
    if size is None:
        g = _standard_gamma_scalar(stream, a_eff)
        if boost:
            # 1 - random() lies in (0, 1], keeping the draw strictly positive
            g *= (1.0 - stream.random()) ** (1.0 / a)
        return g * params.scale
    g = _standard_gamma_batch(stream, a_eff, int(size))
    if boost:
        g *= (1.0 - stream.random(int(size))) ** (1.0 / a)
    return g * params.scale


def sample_white_noise(stream, n_steps, amplitude):
    """``n_steps`` i.i.d. Normal(0, amplitude**2) values, one per time step."""
    if n_steps < 1:
        raise InvalidParams("n_steps must be at least 1")
    if amplitude < 0:
        raise InvalidParams("amplitude must be non-negative")
    return amplitude * stream.standard_normal(n_steps)
