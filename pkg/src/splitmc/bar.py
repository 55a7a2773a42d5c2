"""Fixed-mass-spring bar: linear FEM in space, Newmark in time.

The bar is clamped at ``x = 0``; the free end carries a lumped mass, a
linear spring and a cubic spring. With linear hat functions every matrix
is tridiagonal, so the time-stepping kernel works on three bands and is
compiled with numba (``nogil``) so that worker threads run in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numba
import numpy as np

from .errors import ConfigError, InvalidModulus, NonConvergentStep, SingularSystem
from .rng import GammaParams, sample_gamma, sample_white_noise

FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 50


@dataclass(frozen=True)
class BarConfig:
    rho: float = 7850.0
    area: float = 6.25e-4
    damping_c: float = 5.0
    e_mean: float = 203e9
    e_delta: float = 0.1
    k_lin: float = 650.0
    k_nl: float = 650e13
    mass_tip: float = 1.2
    length: float = 1.0
    n_elements: int = 50
    t_final: float = 8e-3
    dt: float = 8e-3 / 1024
    newmark_beta: float = 0.25
    newmark_gamma: float = 0.5
    # "zero" or nodal values at the n_elements + 1 mesh nodes (node 0 must be 0)
    u0: str | tuple = "zero"
    v0: str | tuple = "zero"
    force_amplitude: float = 1000.0
    # nodal weights of the scalar white-noise load; None puts it at the free end
    force_weights: tuple | None = None

    def __post_init__(self):
        for name in ("rho", "area", "e_mean", "length", "t_final", "dt"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive, got {v}")
        for name in ("damping_c", "k_lin", "k_nl", "mass_tip", "force_amplitude"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not 0 < self.e_delta < 1 / math.sqrt(2):
            raise ConfigError("e_delta must lie in (0, 1/sqrt(2))")
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ConfigError("n_elements must be a positive integer")
        if not 0 <= self.newmark_beta <= 0.5:
            raise ConfigError("newmark_beta must lie in [0, 0.5]")
        if not 0 <= self.newmark_gamma <= 1:
            raise ConfigError("newmark_gamma must lie in [0, 1]")
        for name in ("u0", "v0"):
            v = getattr(self, name)
            if isinstance(v, str):
                if v != "zero":
                    raise ConfigError(f"unknown {name} profile {v!r}")
            else:
                v = tuple(float(x) for x in v)
                if len(v) != self.n_elements + 1:
                    raise ConfigError(f"{name} needs {self.n_elements + 1} nodal values")
                if v[0] != 0.0:
                    raise ConfigError(f"{name} must vanish at the clamped end")
                object.__setattr__(self, name, v)
        if self.force_weights is not None:
            w = tuple(float(x) for x in self.force_weights)
            if len(w) != self.n_elements:
                raise ConfigError(f"force_weights needs {self.n_elements} free-node values")
            object.__setattr__(self, "force_weights", w)

    @property
    def n_steps(self):
        # guard against T/dt landing a hair below an integer
        return int(math.floor(self.t_final / self.dt + 1e-9))

    @property
    def times(self):
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def gamma_params(self):
        return GammaParams(self.e_mean, self.e_delta)

    def free_values(self, profile):
        """Profile restricted to the free nodes 1..n_elements."""
        if isinstance(profile, str):
            return np.zeros(self.n_elements)
        return np.asarray(profile[1:], dtype=float)

    def weights(self):
        if self.force_weights is None:
            w = np.zeros(self.n_elements)
            w[-1] = 1.0
            return w
        return np.asarray(self.force_weights, dtype=float)

    @classmethod
    def from_mapping(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown bar keys: {sorted(unknown)}")
        kw = dict(data)
        for key in ("u0", "v0", "force_weights"):
            if isinstance(kw.get(key), list):
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray

    @property
    def n_dof(self):
        return self.mass.shape[0]


@dataclass(frozen=True, eq=False)
class BarSolution:
    times: np.ndarray
    tip_displacement: np.ndarray
    displacement: np.ndarray | None = field(default=None, repr=False)
    velocity: np.ndarray | None = field(default=None, repr=False)
    acceleration: np.ndarray | None = field(default=None, repr=False)

    @property
    def final_tip(self):
        return float(self.tip_displacement[-1])


def assemble(config, e_modulus):
    """Galerkin matrices for the free nodes, tip mass and spring included."""
    if not (e_modulus > 0 and math.isfinite(e_modulus)):
        raise InvalidModulus(f"elastic modulus must be positive, got {e_modulus}")
    ne = config.n_elements
    h = config.length / ne
    # element matrices: K_e = EA/h [[1,-1],[-1,1]], M_e = rho A h/6 [[2,1],[1,2]],
    # C_e = c h/6 [[2,1],[1,2]]; summed over the uniform mesh they are tridiagonal
    # with doubled diagonal terms at interior nodes
    share = np.full(ne + 1, 2.0)
    share[[0, -1]] = 1.0

    def banded(diag_per_elem, off_per_elem):
        A = np.diag(diag_per_elem * share) + off_per_elem * (np.eye(ne + 1, k=1) + np.eye(ne + 1, k=-1))
        return A[1:, 1:].copy()  # clamp node 0

    K = banded(e_modulus * config.area / h, -e_modulus * config.area / h)
    M = banded(config.rho * config.area * h / 3.0, config.rho * config.area * h / 6.0)
    C = banded(config.damping_c * h / 3.0, config.damping_c * h / 6.0)
    M[-1, -1] += config.mass_tip
    K[-1, -1] += config.k_lin
    return AssembledSystem(M, C, K)


def nonlinear_force(u, k_nl):
    """Cubic spring reaction: only the free-end entry is non-zero."""
    u = np.asarray(u, dtype=float)
    f = np.zeros_like(u)
    f[-1] = -k_nl * u[-1] ** 3
    return f


def _bands(A):
    n = A.shape[0]
    if np.any(np.triu(A, 2)) or np.any(np.tril(A, -2)):
        raise ValueError("matrix is not tridiagonal")
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = np.diag(A, -1)
    upper[:-1] = np.diag(A, 1)
    return lower, np.diag(A).copy(), upper


@numba.njit(cache=True, nogil=True)
def _tri_matvec(lo, di, up, x, out):
    n = x.size
    for i in range(n):
        s = di[i] * x[i]
        if i > 0:
            s += lo[i] * x[i - 1]
        if i < n - 1:
            s += up[i] * x[i + 1]
        out[i] = s


@numba.njit(cache=True, nogil=True)
def _tri_factor(lo, di, up):
    # Thomas algorithm without pivoting; the matrix is symmetric positive definite
    n = di.size
    cp = np.zeros(n)
    den = np.zeros(n)
    den[0] = di[0]
    if den[0] == 0.0:
        return cp, den, False
    for i in range(1, n):
        cp[i - 1] = up[i - 1] / den[i - 1]
        den[i] = di[i] - lo[i] * cp[i - 1]
        if den[i] == 0.0:
            return cp, den, False
    return cp, den, True


@numba.njit(cache=True, nogil=True)
def _tri_solve(lo, cp, den, r, out):
    n = r.size
    out[0] = r[0] / den[0]
    for i in range(1, n):
        out[i] = (r[i] - lo[i] * out[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@numba.njit(cache=True, nogil=True)
def _newmark_kernel(m_lo, m_di, m_up, c_lo, c_di, c_up, k_lo, k_di, k_up,
                    force, u0, v0, dt, n_steps, beta, gamma, k_nl, tol, max_iter,
                    keep_state):
    """Returns (status, failing step, tip series, u, v, a histories).

    status: 0 ok, 1 singular, 2 fixed-point failure.
    """
    n = u0.size
    last = n - 1
    tip = np.zeros(n_steps + 1)
    n_hist = n_steps + 1 if keep_state else 1
    U = np.zeros((n_hist, n))
    V = np.zeros((n_hist, n))
    A = np.zeros((n_hist, n))

    u = u0.copy()
    v = v0.copy()
    a = np.zeros(n)
    tmp = np.zeros(n)
    tmp2 = np.zeros(n)
    r = np.zeros(n)

    # initial acceleration from the equation of motion at t = 0
    cpm, denm, ok = _tri_factor(m_lo, m_di, m_up)
    if not ok:
        return 1, 0, tip, U, V, A
    _tri_matvec(c_lo, c_di, c_up, v, tmp)
    _tri_matvec(k_lo, k_di, k_up, u, tmp2)
    for i in range(n):
        r[i] = force[0, i] - tmp[i] - tmp2[i]
    r[last] -= k_nl * u[last] ** 3
    _tri_solve(m_lo, cpm, denm, r, a)

    tip[0] = u[last]
    if keep_state:
        U[0] = u
        V[0] = v
        A[0] = a

    b2 = beta * dt * dt
    g1 = gamma * dt
    s_lo = m_lo + g1 * c_lo + b2 * k_lo
    s_di = m_di + g1 * c_di + b2 * k_di
    s_up = m_up + g1 * c_up + b2 * k_up
    cps, dens, ok = _tri_factor(s_lo, s_di, s_up)
    if not ok:
        return 1, 0, tip, U, V, A
    # response of the effective system to a unit load at the free end
    e_last = np.zeros(n)
    e_last[last] = 1.0
    g = np.zeros(n)
    _tri_solve(s_lo, cps, dens, e_last, g)

    u_pred = np.zeros(n)
    v_pred = np.zeros(n)
    a_lin = np.zeros(n)
    for step in range(1, n_steps + 1):
        for i in range(n):
            u_pred[i] = u[i] + dt * v[i] + dt * dt * (0.5 - beta) * a[i]
            v_pred[i] = v[i] + dt * (1.0 - gamma) * a[i]
        _tri_matvec(c_lo, c_di, c_up, v_pred, tmp)
        _tri_matvec(k_lo, k_di, k_up, u_pred, tmp2)
        for i in range(n):
            r[i] = force[step, i] - tmp[i] - tmp2[i]
        _tri_solve(s_lo, cps, dens, r, a_lin)

        if k_nl == 0.0:
            for i in range(n):
                a[i] = a_lin[i]
        else:
            # fixed point on the tip load: a = a_lin + g * f_nl(u_pred + b2 * a)
            tip_prev = u_pred[last] + b2 * a[last]
            f_nl = -k_nl * tip_prev ** 3
            converged = False
            for it in range(max_iter):
                tip_new = u_pred[last] + b2 * (a_lin[last] + g[last] * f_nl)
                f_new = -k_nl * tip_new ** 3
                if not np.isfinite(f_new):
                    break
                # displacement update is b2 * g * (f_new - f_nl); compare in inf-norm
                du = 0.0
                un = 0.0
                for i in range(n):
                    d = abs(b2 * g[i] * (f_new - f_nl))
                    if d > du:
                        du = d
                    ui = abs(u_pred[i] + b2 * (a_lin[i] + g[i] * f_new))
                    if ui > un:
                        un = ui
                f_nl = f_new
                if du <= tol * un:
                    converged = True
                    break
            if not converged:
                return 2, step, tip, U, V, A
            for i in range(n):
                a[i] = a_lin[i] + g[i] * f_nl
        for i in range(n):
            u[i] = u_pred[i] + b2 * a[i]
            v[i] = v_pred[i] + g1 * a[i]
        tip[step] = u[last]
        if keep_state:
            U[step] = u
            V[step] = v
            A[step] = a
    return 0, 0, tip, U, V, A


def newmark_solve(system, forcing, dt, n_steps, beta=0.25, gamma=0.5, k_nl=0.0,
                  u0=None, v0=None, keep_state=False):
    """Integrate ``M a + C v + K u = f(t) + f_nl(u)`` with the Newmark scheme.

    ``forcing`` holds nodal loads at the ``n_steps + 1`` time levels, shape
    ``(n_steps + 1, n_dof)``. The cubic tip term is resolved each step by
    fixed-point iteration until the relative displacement change drops
    below 1e-10.
    """
    n = system.n_dof
    forcing = np.ascontiguousarray(forcing, dtype=float)
    if forcing.ndim != 2 or forcing.shape[1] != n or forcing.shape[0] < n_steps + 1:
        raise ValueError(f"forcing must have shape ({n_steps + 1}, {n})")
    u0 = np.zeros(n) if u0 is None else np.asarray(u0, dtype=float)
    v0 = np.zeros(n) if v0 is None else np.asarray(v0, dtype=float)
    status, step, tip, U, V, A = _newmark_kernel(
        *_bands(system.mass), *_bands(system.damping), *_bands(system.stiffness),
        forcing, u0, v0, float(dt), int(n_steps), float(beta), float(gamma),
        float(k_nl), FIXED_POINT_TOL, FIXED_POINT_MAX_ITER, bool(keep_state))
    if status == 1:
        raise SingularSystem("mass or effective stiffness matrix is singular")
    if status == 2:
        raise NonConvergentStep(step, FIXED_POINT_MAX_ITER)
    times = dt * np.arange(n_steps + 1)
    if keep_state:
        return BarSolution(times, tip, U, V, A)
    return BarSolution(times, tip)


def solve_bar(config, e_modulus, noise, keep_state=False):
    """Deterministic solve for one modulus and one scalar noise series."""
    system = assemble(config, e_modulus)
    forcing = np.outer(noise, config.weights())
    return newmark_solve(
        system, forcing, config.dt, config.n_steps, config.newmark_beta,
        config.newmark_gamma, config.k_nl, config.free_values(config.u0),
        config.free_values(config.v0), keep_state)


def simulate_realization(config, stream):
    """One realization: draw E, then one noise value per time level, then solve.

    E is held fixed over the whole space-time domain of the realization.
    """
    e_modulus = sample_gamma(stream, config.gamma_params)
    noise = sample_white_noise(stream, config.n_steps + 1, config.force_amplitude)
    return solve_bar(config, e_modulus, noise)


def first_natural_frequency(system):
    """Smallest circular eigenfrequency of ``K x = w**2 M x``."""
    from scipy.linalg import eigh

    w2 = eigh(system.stiffness, system.mass, eigvals_only=True, subset_by_index=[0, 0])
    return math.sqrt(w2[0])
