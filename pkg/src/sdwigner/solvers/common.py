"""Shared solver plumbing: configuration, stencils, ladders, stepping, observables.

Conventions used by every solver in this package:
  state arrays carry momentum axes first, spatial axes last (WignerState layout);
  momentum-offset sums treat indices beyond the lattice as zeros (bounded-state
  premise), independent of the spatial boundary policy;
  harmonic sums accumulate each +m with its -m partner before moving to the
  next offset, preserving the conditional-convergence ordering of the series.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..phasespace import PhaseSpaceGrid, PhysicalConstants
from ..transform import WignerState


class SolverInstabilityError(RuntimeError):
    """Norm blew up by more than 10x over a single step."""


class FredholmConvergenceError(RuntimeError):
    """Resolvent iteration failed to reach tolerance; carries residual history."""

    def __init__(self, message: str, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass(frozen=True)
class SolverConfig:
    """Shared knobs for all evolution solvers.

    dt, t_end in seconds.  m_truncation bounds the symmetric momentum-offset
    sums (None means the full lattice half-range).  gamma0 is the auxiliary
    event rate of the integral-form solvers (None means the automatic bound
    from the finite-difference coefficients).  boundary applies to spatial
    axes only; momentum overflow is always treated as zero.
    """

    dt: float
    t_end: float
    m_truncation: Optional[int] = None
    gamma0: Optional[float] = None
    stencil_order: int = 2
    boundary: str = "zero"
    rng_seed: int = 0
    n_particles: int = 20000
    fredholm_tol: float = 1e-8
    fredholm_max_iter: int = 200
    weight_cap: float = 1e6

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.stencil_order not in (2, 4):
            raise ValueError(f"stencil_order must be 2 or 4, got {self.stencil_order}")
        if self.boundary not in ("zero", "periodic"):
            raise ValueError(f"boundary must be 'zero' or 'periodic', got {self.boundary!r}")
        if self.m_truncation is not None and self.m_truncation < 1:
            raise ValueError("m_truncation must be None or >= 1")
        if self.gamma0 is not None and not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive when given")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.fredholm_tol <= 0 or self.fredholm_max_iter < 1:
            raise ValueError("fredholm_tol must be positive and fredholm_max_iter >= 1")
        if self.weight_cap <= 1:
            raise ValueError("weight_cap must exceed 1")

    def validate(self, grid: PhaseSpaceGrid) -> None:
        """Advective stability: dt * v_max / dx <= 0.5 per spatial axis."""
        mass = grid.constants.mass
        for c in range(grid.dim):
            v_max = grid.n_p[c] * grid.dp[c] / mass
            cap = 0.5 * grid.dx[c] / v_max if v_max > 0 else np.inf
            if self.dt > cap * (1 + 1e-12):
                raise ValueError(
                    f"dt={self.dt:.3e} s exceeds the advective cap {cap:.3e} s on axis {c} "
                    f"(v_max={v_max:.3e} m/s, dx={grid.dx[c]:.3e} m)"
                )

    def momentum_cutoff(self, grid: PhaseSpaceGrid, axis: int) -> int:
        # offsets beyond 2 n_p cannot touch any lattice point, so cap there;
        # the default half-range keeps the pair sum inside the stored lattice
        n = grid.n_p[axis]
        return n if self.m_truncation is None else min(self.m_truncation, 2 * n)


DEFAULT_CONFIG_KWARGS = dict(stencil_order=2, boundary="zero")


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, WignerState) else np.asarray(f)


def sample_shift(values: np.ndarray, axis: int, k: int, boundary: str = "zero") -> np.ndarray:
    """g with g[i] = values[i + k] along one array axis.

    boundary 'zero' fills vacated cells with 0; 'periodic' wraps.
    """
    if k == 0:
        return values
    if boundary == "periodic":
        return np.roll(values, -k, axis=axis)
    out = np.zeros_like(values)
    n = values.shape[axis]
    if abs(k) >= n:
        return out
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if k > 0:
        dst[axis] = slice(0, n - k)
        src[axis] = slice(k, n)
    else:
        dst[axis] = slice(-k, n)
        src[axis] = slice(0, n + k)
    out[tuple(dst)] = values[tuple(src)]
    return out


def spatial_derivative(values: np.ndarray, grid: PhaseSpaceGrid, axis: int,
                       order: int = 2, boundary: str = "zero") -> np.ndarray:
    """Central difference along spatial axis `axis` (0-based within space)."""
    ax = grid.dim + axis
    h = grid.dx[axis]
    if order == 2:
        return (sample_shift(values, ax, 1, boundary)
                - sample_shift(values, ax, -1, boundary)) / (2.0 * h)
    if order == 4:
        return (-sample_shift(values, ax, 2, boundary)
                + 8.0 * sample_shift(values, ax, 1, boundary)
                - 8.0 * sample_shift(values, ax, -1, boundary)
                + sample_shift(values, ax, -2, boundary)) / (12.0 * h)
    raise ValueError(f"unsupported stencil order {order}")


def momentum_difference(values: np.ndarray, grid: PhaseSpaceGrid, axis: int) -> np.ndarray:
    """Central first difference on the momentum lattice, zero-filled ends."""
    return (sample_shift(values, axis, 1) - sample_shift(values, axis, -1)) \
        / (2.0 * grid.dp[axis])


def momentum_second_difference(values: np.ndarray, grid: PhaseSpaceGrid, axis: int) -> np.ndarray:
    """Central second difference on the momentum lattice, zero-filled ends."""
    return (sample_shift(values, axis, 1) - 2.0 * values + sample_shift(values, axis, -1)) \
        / grid.dp[axis] ** 2


def odd_pair_ladder(values: np.ndarray, axis: int, coeffs: np.ndarray) -> np.ndarray:
    """sum_m c(m) f(M - m) for an odd coefficient family, pairs summed together.

    coeffs[k] holds c(m = k + 1); the -m partner enters with opposite sign.
    """
    out = np.zeros_like(values)
    for k, c in enumerate(coeffs):
        m = k + 1
        if c == 0.0:
            continue
        out += c * (sample_shift(values, axis, -m) - sample_shift(values, axis, m))
    return out


def even_pair_ladder(values: np.ndarray, axis: int, coeffs: np.ndarray) -> np.ndarray:
    """sum_m c(m) f(M - m) for an even family, m = 0 excluded, pairs together."""
    out = np.zeros_like(values)
    for k, c in enumerate(coeffs):
        m = k + 1
        if c == 0.0:
            continue
        out += c * (sample_shift(values, axis, -m) + sample_shift(values, axis, m))
    return out


def box_offset_sum(values: np.ndarray, axis: int, m_max: int) -> np.ndarray:
    """sum over every offset -m_max..m_max of f(M - m), zero-filled, pairs together."""
    out = values.copy()
    for m in range(1, m_max + 1):
        out += sample_shift(values, axis, -m) + sample_shift(values, axis, m)
    return out


def advection_term(values: np.ndarray, grid: PhaseSpaceGrid,
                   order: int = 2, boundary: str = "zero",
                   constants: Optional[PhysicalConstants] = None) -> np.ndarray:
    """-(P_M / m) . spatial gradient of f, broadcast over the momentum lattice."""
    c = constants or grid.constants
    out = np.zeros_like(values)
    for ax in range(grid.dim):
        v = grid.p_axes[ax] / c.mass
        shape = [1] * values.ndim
        shape[ax] = len(v)
        out -= v.reshape(shape) * spatial_derivative(values, grid, ax, order, boundary)
    return out


def rk4_step(values: np.ndarray, dt: float, rhs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    k1 = rhs(values)
    k2 = rhs(values + 0.5 * dt * k1)
    k3 = rhs(values + 0.5 * dt * k2)
    k4 = rhs(values + dt * k3)
    return values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Constant-momentum characteristic through (momentum, position, time)."""

    momentum: np.ndarray
    position: np.ndarray
    time: float
    mass: float

    def position_at(self, t_prime: float) -> np.ndarray:
        if t_prime > self.time + 1e-30 * abs(self.time):
            raise ValueError("trajectory is traced backward: t_prime must not exceed origin time")
        return self.position - (self.momentum / self.mass) * (self.time - t_prime)


def free_flight(origin, t_prime: float,
                constants: Optional[PhysicalConstants] = None) -> np.ndarray:
    """Backward position on the constant-momentum path from origin = (P, x, t)."""
    c = constants or PhysicalConstants()
    p, x, t = origin
    traj = Trajectory(np.asarray(p, dtype=float), np.asarray(x, dtype=float), float(t), c.mass)
    return traj.position_at(float(t_prime))


def advect_free_flight(values: np.ndarray, grid: PhaseSpaceGrid, delta_t: float,
                       boundary: str = "zero",
                       constants: Optional[PhysicalConstants] = None) -> np.ndarray:
    """out(M, x) = values(M, x - v_M delta_t), v_M = P_M / m, per-axis linear interp.

    The x shift depends only on the momentum index of the same axis, so the
    interpolation separates into 1D fractional shifts applied per lattice row.
    """
    if delta_t == 0.0:
        return values.copy()
    c = constants or grid.constants
    out = np.array(values, copy=True)
    for ax in range(grid.dim):
        deltas = grid.p_axes[ax] * delta_t / (c.mass * grid.dx[ax])
        sl = [slice(None)] * out.ndim
        for j, d in enumerate(deltas):
            if d == 0.0:
                continue
            sl[ax] = j
            idx = tuple(sl)
            out[idx] = _fractional_shift(out[idx], grid.dim + ax - 1, float(d), boundary)
        sl[ax] = slice(None)
    return out


def _fractional_shift(values: np.ndarray, axis: int, delta: float, boundary: str) -> np.ndarray:
    """g[i] = values[i - delta] by linear interpolation between the two neighbors."""
    k = int(np.floor(delta))
    frac = delta - k
    a = sample_shift(values, axis, -k, boundary)
    if frac == 0.0:
        return a
    b = sample_shift(values, axis, -(k + 1), boundary)
    return (1.0 - frac) * a + frac * b


# ---------------------------------------------------------------------------
# observables and evolution loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservableRecord:
    """density n(x), per-point mean momentum (NaN where density underflows), total mass."""

    density: np.ndarray
    mean_momentum: np.ndarray   # (dim,) + spatial shape
    total_mass: float


def observables(f, grid: PhaseSpaceGrid) -> ObservableRecord:
    values = _values(f)
    m_axes = tuple(range(grid.dim))
    density = values.sum(axis=m_axes)
    cell = float(np.prod(grid.dx))
    mean = np.empty((grid.dim,) + grid.n_x)
    guard = np.abs(density) < max(1e-14 * np.max(np.abs(density), initial=0.0), 1e-300)
    for c in range(grid.dim):
        shape = [1] * values.ndim
        shape[c] = len(grid.p_axes[c])
        num = (values * grid.p_axes[c].reshape(shape)).sum(axis=m_axes)
        with np.errstate(divide="ignore", invalid="ignore"):
            mean[c] = np.where(guard, np.nan, num / np.where(guard, 1.0, density))
    return ObservableRecord(density=density, mean_momentum=mean,
                            total_mass=float(values.sum() * cell))


def mean_momentum_global(f, grid: PhaseSpaceGrid) -> np.ndarray:
    """Ensemble-mean momentum vector over all of phase space."""
    values = _values(f)
    total = values.sum()
    if abs(total) < 1e-300:
        return np.full(grid.dim, np.nan)
    out = np.empty(grid.dim)
    for c in range(grid.dim):
        shape = [1] * values.ndim
        shape[c] = len(grid.p_axes[c])
        out[c] = (values * grid.p_axes[c].reshape(shape)).sum() / total
    return out


def boundary_mass_fraction(f, grid: PhaseSpaceGrid) -> float:
    """|f| fraction sitting on the outermost momentum shells (leakage monitor)."""
    values = np.abs(_values(f))
    total = values.sum()
    if total == 0.0:
        return 0.0
    edge = 0.0
    for c in range(grid.dim):
        sl = [slice(None)] * values.ndim
        sl[c] = 0
        edge += values[tuple(sl)].sum()
        sl[c] = values.shape[c] - 1
        edge += values[tuple(sl)].sum()
    return float(edge / total)


def default_gamma0(field, grid: PhaseSpaceGrid,
                   config: Optional["SolverConfig"] = None) -> float:
    """Auto event rate: max over the grid of the l1 coefficient mass of the
    discretized force-plus-gradient operator.  Falls back to 1/t_end when the
    field vanishes (so the rate is positive even for free streaming)."""
    from ..kernels import linear_coefficients
    co = linear_coefficients(field, grid)
    dpx, dpy = grid.dp
    dx, dy = grid.dx
    # force tables depend on one momentum index each; reduce those first
    fx = np.max(np.abs(co.force_x), axis=0)
    fy = np.max(np.abs(co.force_y), axis=0)
    base = float(np.max(fx / dpx + fy / dpy))
    kappa = abs(co.cross_dx)
    if kappa != 0.0:
        base += 4.0 * kappa / (dpy ** 2 * dx) + kappa / (dpx * dpy * dy)
    if base > 0.0:
        return base
    if config is not None:
        return 1.0 / config.t_end
    return 1.0


@dataclass
class EvolutionResult:
    values: np.ndarray
    times: list
    masses: list
    mean_momenta: list      # entries are (dim,) vectors
    boundary_fractions: list


def evolve(f0, rhs: Callable[[np.ndarray], np.ndarray], grid: PhaseSpaceGrid,
           config: SolverConfig, n_steps: Optional[int] = None,
           record_every: int = 1,
           observer: Optional[Callable[[int, float, np.ndarray], None]] = None) -> EvolutionResult:
    """March f0 with RK4, recording observable traces and guarding stability."""
    config.validate(grid)
    values = np.array(_values(f0), dtype=float, copy=True)
    if n_steps is None:
        n_steps = int(round(config.t_end / config.dt))
    cell = float(np.prod(grid.dx))
    result = EvolutionResult(values, [], [], [], [])

    def record(step, t):
        result.times.append(t)
        result.masses.append(float(values.sum() * cell))
        result.mean_momenta.append(mean_momentum_global(values, grid))
        result.boundary_fractions.append(boundary_mass_fraction(values, grid))
        if observer is not None:
            observer(step, t, values)

    record(0, 0.0)
    norm_prev = float(np.linalg.norm(values))
    for step in range(1, n_steps + 1):
        values = rk4_step(values, config.dt, rhs)
        norm = float(np.linalg.norm(values))
        if norm_prev > 0 and norm > 10.0 * norm_prev:
            raise SolverInstabilityError(
                f"norm grew {norm / norm_prev:.1f}x at step {step} "
                f"(t={step * config.dt:.3e} s); dt likely violates stability"
            )
        norm_prev = norm if norm > 0 else norm_prev
        if step % record_every == 0 or step == n_steps:
            result.values = values
            record(step, step * config.dt)
    result.values = values
    return result
