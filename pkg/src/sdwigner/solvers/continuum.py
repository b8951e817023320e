"""Finite-difference evolution of the small-spacing limit equation (2D).

Momentum derivatives are central differences on the index lattice with
zero fill beyond the edges; spatial derivatives share the stencil settings
of the ladder solver.  With no field gradient the right-hand side reduces
exactly to advection plus the classical force term.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..kernels import LinearKernelCoefficients, linear_coefficients
from ..phasespace import LinearEMField, PhaseSpaceGrid
from ..transform import WignerState
from .common import (SolverConfig, SolverInstabilityError, advection_term,
                     momentum_difference, momentum_second_difference,
                     rk4_step, spatial_derivative)


def force_and_quantum(values: np.ndarray, coeffs: LinearKernelCoefficients,
                      grid: PhaseSpaceGrid, config: Optional[SolverConfig] = None) -> np.ndarray:
    """Right-hand side minus advection: the part reused by the integral solver."""
    order = config.stencil_order if config else 2
    boundary = config.boundary if config else "zero"
    out = np.zeros_like(values)
    if np.any(coeffs.force_x):
        out -= coeffs.force_x[None, :, :, :] * momentum_difference(values, grid, 0)
    if np.any(coeffs.force_y):
        out -= coeffs.force_y[:, None, :, :] * momentum_difference(values, grid, 1)
    kappa = -coeffs.cross_dx
    if kappa != 0.0:
        dxf = spatial_derivative(values, grid, 0, order, boundary)
        dyf = spatial_derivative(values, grid, 1, order, boundary)
        out += kappa * momentum_second_difference(dxf, grid, 1)
        out -= kappa * momentum_difference(momentum_difference(dyf, grid, 1), grid, 0)
    return out


def rhs_continuum_fd(f, field: LinearEMField, grid: PhaseSpaceGrid,
                     config: Optional[SolverConfig] = None,
                     coeffs: Optional[LinearKernelCoefficients] = None) -> np.ndarray:
    """Time derivative in the small-spacing limit; accepts WignerState or array.

    Pass precomputed `coeffs` in stepping loops to avoid rebuilding the force
    tables on every stage.
    """
    values = f.values if isinstance(f, WignerState) else np.asarray(f)
    if grid.dim != 2:
        raise ValueError("the finite-difference solver requires a 2D grid")
    if coeffs is None:
        coeffs = linear_coefficients(field, grid)
    order = config.stencil_order if config else 2
    boundary = config.boundary if config else "zero"
    out = advection_term(values, grid, order, boundary)
    out += force_and_quantum(values, coeffs, grid, config)
    return out


def make_rhs(field: LinearEMField, grid: PhaseSpaceGrid, config: SolverConfig,
             coeffs: Optional[LinearKernelCoefficients] = None):
    if coeffs is None:
        coeffs = linear_coefficients(field, grid)
    def rhs(values: np.ndarray) -> np.ndarray:
        return rhs_continuum_fd(values, field, grid, config, coeffs)
    return rhs


def step_continuum(f: WignerState, field: LinearEMField,
                   config: SolverConfig,
                   coeffs: Optional[LinearKernelCoefficients] = None) -> WignerState:
    """One RK4 step of the small-spacing equation with blow-up detection."""
    grid = f.grid
    config.validate(grid)
    rhs = make_rhs(field, grid, config, coeffs)
    before = float(np.linalg.norm(f.values))
    values = rk4_step(f.values, config.dt, rhs)
    after = float(np.linalg.norm(values))
    if before > 0 and after > 10.0 * before:
        raise SolverInstabilityError(
            f"norm grew {after / before:.1f}x in one step of dt={config.dt:.3e} s"
        )
    return WignerState(grid=grid, values=values, time=f.time + config.dt)
