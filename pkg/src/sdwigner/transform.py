"""Discrete Weyl and Weyl-Stratonovich transforms on the bounded geometry.

The forward map takes a density matrix sampled in center-of-mass coordinates
(x on the Omega grid, s on the symmetric relative lattice) to a real
phase-space function of the discrete kinetic momentum:

    f(M, x) = (1/N) sum_j exp(-i P_M . s_j / hbar) Phi(x, s_j) rho(x; s_j)

with the Stratonovich phase

    Phi(x, s) = exp(-(i e / 2 hbar) s . int_{-1}^{1} A(x + s tau / 2) dtau)

making the momentum argument kinetic rather than canonical.  On the uniform
symmetric s lattice the sum is an exact scaled DFT per axis, so forward and
inverse compose to the identity at machine precision.  The tau line integral
uses fixed-order Gauss-Legendre nodes; they are symmetric in tau, which keeps
Phi(x, -s) = conj(Phi(x, s)) exact and hence the output real for Hermitian
input even when the quadrature itself is inexact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .phasespace import GaugeSpec, PhaseSpaceGrid, PhysicalConstants

DEFAULT_TAU_ORDER = 16
DEFAULT_REALNESS_TOL = 1e-10


class TransformConsistencyError(ValueError):
    """Imaginary residue above tolerance: inconsistent rho/gauge or too few tau nodes."""


@dataclass(frozen=True)
class DensityMatrix:
    """rho(x + s/2, x - s/2) sampled over (x grid) x (s lattice), complex.

    Array axes: spatial axes first, then relative axes, shape grid.n_x + grid.n_s.
    """

    grid: PhaseSpaceGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        expected = self.grid.n_x + self.grid.n_s
        if self.values.shape != expected:
            raise ValueError(f"values: expected shape {expected}, got {self.values.shape}")

    def hermiticity_defect(self) -> float:
        """Max |rho(x, s) - conj(rho(x, -s))| relative to the largest magnitude."""
        d = self.grid.dim
        flipped = np.flip(self.values, axis=tuple(range(d, 2 * d)))
        scale = np.max(np.abs(self.values))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.values - np.conj(flipped))) / scale)

    def diagonal(self) -> np.ndarray:
        """rho(x, x), i.e. the s = 0 slice: the position-space density."""
        center = tuple(n for n in self.grid.n_p)
        return self.values[(Ellipsis,) + center]


@dataclass(frozen=True)
class WignerState:
    """Real phase-space function over (momentum lattice) x (x grid).

    Array axes: momentum axes first, then spatial axes, shape grid.n_s + grid.n_x.
    """

    grid: PhaseSpaceGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != self.grid.state_shape:
            raise ValueError(
                f"values: expected shape {self.grid.state_shape}, got {self.values.shape}")
        if np.iscomplexobj(self.values):
            raise ValueError("WignerState values must be real; take the checked transform output")


@dataclass(frozen=True)
class WignerPotentialTable:
    """Momentum-transfer table of a scalar potential.

    values[m..., x...] is real-valued up to roundoff and odd in m for real
    potentials; kept complex so the antisymmetry can be asserted, not assumed.
    """

    grid: PhaseSpaceGrid
    values: np.ndarray


def gauss_legendre_nodes(n_tau: int):
    """Nodes and weights on (-1, 1). Symmetric by construction."""
    if n_tau < 2:
        raise ValueError("need at least 2 tau nodes")
    return np.polynomial.legendre.leggauss(n_tau)


def _forward_matrix(n_p: int) -> np.ndarray:
    # W[M, j] = exp(-2 pi i M j / N) / N on symmetric indices; unitary up to the 1/N split
    n = 2 * n_p + 1
    idx = np.arange(-n_p, n_p + 1)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / n


def _inverse_matrix(n_p: int) -> np.ndarray:
    # columns indexed by M, rows by j: g(s_j) = sum_M exp(+2 pi i M j / N) f_M
    n = 2 * n_p + 1
    idx = np.arange(-n_p, n_p + 1)
    return np.exp(2j * np.pi * np.outer(idx, idx) / n)


def _dft_forward(core: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Apply the forward DFT over the trailing s axes of core (x..., s...) -> (M..., x...)."""
    mats = [_forward_matrix(n) for n in grid.n_p]
    if grid.dim == 1:
        return np.einsum("Aa,xa->Ax", mats[0], core, optimize=True)
    if grid.dim == 2:
        return np.einsum("Aa,Bb,xyab->ABxy", mats[0], mats[1], core, optimize=True)
    return np.einsum("Aa,Bb,Cc,xyzabc->ABCxyz", mats[0], mats[1], mats[2], core, optimize=True)


def _dft_inverse(f: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Inverse over the leading momentum axes of f (M..., x...) -> (x..., s...)."""
    mats = [_inverse_matrix(n) for n in grid.n_p]
    if grid.dim == 1:
        return np.einsum("aA,Ax->xa", mats[0], f, optimize=True)
    if grid.dim == 2:
        return np.einsum("aA,bB,ABxy->xyab", mats[0], mats[1], f, optimize=True)
    return np.einsum("aA,bB,cC,ABCxyz->xyzabc", mats[0], mats[1], mats[2], f, optimize=True)


def _offset_positions(grid: PhaseSpaceGrid, scale_s) -> np.ndarray:
    """Points x + scale_s * s over (x grid, s lattice), shape n_x + n_s + (dim,)."""
    d = grid.dim
    out = np.zeros(grid.n_x + grid.n_s + (d,))
    for c in range(d):
        x = grid.x_axes[c].reshape((1,) * c + (-1,) + (1,) * (2 * d - c - 1))
        s = grid.s_axes[c].reshape((1,) * (d + c) + (-1,) + (1,) * (d - c - 1))
        out[..., c] = x + scale_s * s
    return out


def stratonovich_phase(grid: PhaseSpaceGrid,
                       gauge: Optional[GaugeSpec],
                       constants: Optional[PhysicalConstants] = None,
                       n_tau: int = DEFAULT_TAU_ORDER) -> np.ndarray:
    """The line-integral phase Phi(x, s) on (x grid) x (s lattice).

    Returns the unit array when the gauge carries no vector potential, which
    reduces the transform to the plain Weyl form through the same code path.
    """
    c = constants or grid.constants
    if gauge is None or not gauge.has_vector_potential():
        return np.ones(grid.n_x + grid.n_s, dtype=complex)
    nodes, weights = gauss_legendre_nodes(n_tau)
    d = grid.dim
    exponent = np.zeros(grid.n_x + grid.n_s)
    for tau, w in zip(nodes, weights):
        pos = _offset_positions(grid, 0.5 * tau)
        a = gauge.vector_potential(pos)
        s_dot_a = np.zeros(grid.n_x + grid.n_s)
        for comp in range(d):
            s = grid.s_axes[comp].reshape((1,) * (d + comp) + (-1,) + (1,) * (d - comp - 1))
            s_dot_a += s * a[..., comp]
        exponent += w * s_dot_a
    return np.exp(-1j * (c.charge / (2.0 * c.hbar)) * exponent)


def wigner_from_density(rho: DensityMatrix,
                        gauge: Optional[GaugeSpec] = None,
                        constants: Optional[PhysicalConstants] = None,
                        n_tau: int = DEFAULT_TAU_ORDER,
                        realness_tol: float = DEFAULT_REALNESS_TOL) -> WignerState:
    """Forward transform; gauge None (or A = None) gives the electrostatic Weyl limit.

    Raises TransformConsistencyError when the imaginary residue of the result
    exceeds realness_tol relative to the largest real magnitude.
    """
    grid = rho.grid
    phase = stratonovich_phase(grid, gauge, constants, n_tau)
    f = _dft_forward(phase * rho.values, grid)
    scale = np.max(np.abs(f.real))
    residue = np.max(np.abs(f.imag)) / scale if scale > 0.0 else np.max(np.abs(f.imag))
    if residue > realness_tol:
        raise TransformConsistencyError(
            f"imaginary residue {residue:.3e} exceeds tolerance {realness_tol:.3e}; "
            "check Hermiticity of rho, the gauge, and n_tau")
    return WignerState(grid, np.ascontiguousarray(f.real), rho.time)


def density_from_wigner(f: WignerState,
                        gauge: Optional[GaugeSpec] = None,
                        constants: Optional[PhysicalConstants] = None,
                        n_tau: int = DEFAULT_TAU_ORDER) -> DensityMatrix:
    """Inverse transform: rho(x; s) = conj(Phi(x, s)) sum_M exp(+i P_M . s / hbar) f(M, x)."""
    grid = f.grid
    phase = stratonovich_phase(grid, gauge, constants, n_tau)
    core = _dft_inverse(f.values.astype(complex), grid)
    return DensityMatrix(grid, np.conj(phase) * core, f.time)


def weyl_from_density(rho: DensityMatrix, **kwargs) -> WignerState:
    """Electrostatic Weyl transform: the A = 0 specialization of the forward map."""
    return wigner_from_density(rho, gauge=None, **kwargs)


def apply_gauge_change(rho: DensityMatrix,
                       chi: Callable,
                       constants: Optional[PhysicalConstants] = None) -> DensityMatrix:
    """Relabel rho under A -> A + grad(chi):

        rho'(r1, r2) = exp(+(i e/hbar) chi(r1)) rho(r1, r2) exp(-(i e/hbar) chi(r2))

    The sign pairs with the forward transform's phase so that transforming
    rho' with the shifted potential reproduces the original phase-space
    function; the diagonal r1 = r2 is untouched.
    """
    grid = rho.grid
    c = constants or grid.constants
    r1 = _offset_positions(grid, +0.5)
    r2 = _offset_positions(grid, -0.5)
    factor = np.exp(1j * (c.charge / c.hbar) * (np.asarray(chi(r1)) - np.asarray(chi(r2))))
    return DensityMatrix(grid, factor * rho.values, rho.time)


def wigner_potential(potential: Callable,
                     grid: PhaseSpaceGrid,
                     constants: Optional[PhysicalConstants] = None) -> WignerPotentialTable:
    """Momentum-transfer table of a scalar potential energy V:

        V_w(m, x) = (1/(i hbar)) (1/N) sum_j exp(-i m dp . s_j / hbar)
                    [V(x - s_j/2) - V(x + s_j/2)]

    V is a callable on positions (..., dim) and must be defined on the
    s-reachable neighborhood of the domain (half extent omega/2 + L/4).
    Odd in m and real-valued for real V.
    """
    c = constants or grid.constants
    minus = np.asarray(potential(_offset_positions(grid, -0.5)), dtype=float)
    plus = np.asarray(potential(_offset_positions(grid, +0.5)), dtype=float)
    table = _dft_forward((minus - plus).astype(complex), grid) / (1j * c.hbar)
    return WignerPotentialTable(grid, table)
