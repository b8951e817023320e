"""Integral-form solver: damped free flight plus a memory sum over collisions.

The evolution is rewritten with an auxiliary rate gamma0 so the propagator
becomes exp(-gamma0 (t - t')) times free flight, and the remaining coupling
K[f] = (force and gradient terms) + gamma0 f enters through a time integral
along each backward characteristic.  The trajectory is discretized on the
stepper's own dt with trapezoid weights and solved by plain iteration sweeps
over the whole time range (each sweep adds one order of the expansion in K).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..kernels import linear_coefficients
from ..phasespace import LinearEMField, PhaseSpaceGrid
from ..transform import WignerState
from .common import (FredholmConvergenceError, SolverConfig,
                     advect_free_flight, default_gamma0)
from .continuum import force_and_quantum


@dataclass
class FredholmResult:
    state: WignerState
    residuals: List[float]
    n_sweeps: int
    gamma0: float


def solve_fredholm_resolvent(f0, field: LinearEMField, grid: PhaseSpaceGrid,
                             config: SolverConfig) -> FredholmResult:
    """Solve up to t_end on a uniform time mesh; returns the final state.

    t_end must be an integer multiple of dt.  Raises
    FredholmConvergenceError (with the residual history attached) if the
    sweeps fail to reach config.fredholm_tol within config.fredholm_max_iter.
    """
    if grid.dim != 2:
        raise ValueError("the integral-form solver requires a 2D grid")
    config.validate(grid)
    values0 = np.array(f0.values if isinstance(f0, WignerState) else f0,
                       dtype=float, copy=True)
    dt = config.dt
    steps = config.t_end / dt
    n_t = int(round(steps))
    if abs(steps - n_t) > 1e-9 * max(1.0, steps) or n_t < 1:
        raise ValueError(f"t_end={config.t_end!r} is not an integer multiple of dt={dt!r}")

    gamma0 = config.gamma0 if config.gamma0 is not None else default_gamma0(field, grid, config)
    coeffs = linear_coefficients(field, grid)
    boundary = config.boundary

    # damped free-flight source, advected directly from t=0 (no compounding)
    source = np.empty((n_t + 1,) + values0.shape)
    source[0] = values0
    for k in range(1, n_t + 1):
        source[k] = np.exp(-gamma0 * k * dt) * advect_free_flight(
            values0, grid, k * dt, boundary)

    traj = source.copy()
    new = np.empty_like(traj)
    kvals = np.empty_like(traj)
    decay = np.exp(-gamma0 * dt * np.arange(n_t + 1))

    residuals: List[float] = []
    for sweep in range(1, config.fredholm_max_iter + 1):
        for j in range(n_t + 1):
            kvals[j] = force_and_quantum(traj[j], coeffs, grid, config) + gamma0 * traj[j]
        new[:] = source
        for j in range(n_t + 1):
            for k in range(max(j, 1), n_t + 1):
                lag = k - j
                w = 0.5 * dt if (j == 0 or j == k) else dt
                if lag == 0:
                    new[k] += w * kvals[j]
                else:
                    new[k] += (w * decay[lag]) * advect_free_flight(
                        kvals[j], grid, lag * dt, boundary)
        norm = float(np.linalg.norm(new))
        res = float(np.linalg.norm(new - traj)) / (norm if norm > 0 else 1.0)
        residuals.append(res)
        traj, new = new.copy(), new
        if res < config.fredholm_tol:
            return FredholmResult(
                state=WignerState(grid=grid, values=traj[n_t], time=config.t_end),
                residuals=residuals, n_sweeps=sweep, gamma0=gamma0)
    raise FredholmConvergenceError(
        f"integral solver stalled at residual {residuals[-1]:.3e} "
        f"after {config.fredholm_max_iter} sweeps (tol {config.fredholm_tol:.1e})",
        residuals)
