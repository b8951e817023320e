"""Canonical test states: Gaussian packets as density matrices and phase-space functions."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .phasespace import PhaseSpaceGrid, PhysicalConstants
from .transform import DensityMatrix, WignerState, _offset_positions


def _per_axis(value, dim, name):
    if np.isscalar(value):
        return (float(value),) * dim
    out = tuple(float(v) for v in value)
    if len(out) != dim:
        raise ValueError(f"{name}: expected scalar or length-{dim} sequence")
    return out


def gaussian_density(grid: PhaseSpaceGrid,
                     center=0.0,
                     sigma=1.0,
                     momentum=0.0,
                     constants: Optional[PhysicalConstants] = None) -> DensityMatrix:
    """Pure-state density matrix of a normalized Gaussian packet.

    psi(r) = prod_c (2 pi sigma_c^2)^(-1/4) exp(-(r_c - c_c)^2/(4 sigma_c^2)
             + i p_c r_c / hbar), rho = psi(x + s/2) conj(psi)(x - s/2).

    Entries where either endpoint x +- s/2 leaves the domain are zeroed; the
    mask is symmetric under s -> -s, so Hermiticity survives exactly.  Choose
    sigma small against the domain so the clipped tail is negligible.
    """
    c = constants or grid.constants
    d = grid.dim
    center = _per_axis(center, d, "center")
    sigma = _per_axis(sigma, d, "sigma")
    momentum = _per_axis(momentum, d, "momentum")

    def psi(pos):
        out = np.ones(pos.shape[:-1], dtype=complex)
        for k in range(d):
            r = pos[..., k]
            out = out * (2 * np.pi * sigma[k] ** 2) ** (-0.25) * np.exp(
                -((r - center[k]) ** 2) / (4 * sigma[k] ** 2) + 1j * momentum[k] * r / c.hbar)
        return out

    r1 = _offset_positions(grid, +0.5)
    r2 = _offset_positions(grid, -0.5)
    values = psi(r1) * np.conj(psi(r2))
    inside = np.ones(values.shape, dtype=bool)
    for k in range(d):
        half = 0.5 * grid.omega_extent[k]
        inside &= (np.abs(r1[..., k]) <= half) & (np.abs(r2[..., k]) <= half)
    values[~inside] = 0.0
    return DensityMatrix(grid, values)


def gaussian_wigner(grid: PhaseSpaceGrid,
                    center=0.0,
                    sigma_x=1.0,
                    momentum_center=0.0,
                    sigma_p=1.0,
                    mass_normalized: bool = True) -> WignerState:
    """Separable Gaussian directly in phase space, for exercising the solvers.

    Not constrained to be a pure state.  With mass_normalized the discrete
    mass sum(f) * prod(dx) equals 1.
    """
    d = grid.dim
    center = _per_axis(center, d, "center")
    sigma_x = _per_axis(sigma_x, d, "sigma_x")
    momentum_center = _per_axis(momentum_center, d, "momentum_center")
    sigma_p = _per_axis(sigma_p, d, "sigma_p")

    values = np.ones(grid.state_shape)
    for k in range(d):
        p = grid.p_axes[k].reshape((1,) * k + (-1,) + (1,) * (2 * d - k - 1))
        values = values * np.exp(-((p - momentum_center[k]) ** 2) / (2 * sigma_p[k] ** 2))
    for k in range(d):
        x = grid.x_axes[k].reshape((1,) * (d + k) + (-1,) + (1,) * (d - k - 1))
        values = values * np.exp(-((x - center[k]) ** 2) / (2 * sigma_x[k] ** 2))
    if mass_normalized:
        total = values.sum() * float(np.prod(grid.dx))
        if total > 0:
            values = values / total
    return WignerState(grid, values)
