"""Gauge-invariant semi-discrete Wigner transport on bounded coherence domains."""

__version__ = "0.1.0"

from .phasespace import (
    SI,
    FieldCoverageError,
    GaugeSpec,
    LinearEMField,
    PhaseSpaceGrid,
    PhysicalConstants,
    SampledEMField,
    landau_gauge,
    make_grid,
    symmetric_gauge,
    zero_gauge,
)
from .transform import (
    DensityMatrix,
    TransformConsistencyError,
    WignerPotentialTable,
    WignerState,
    apply_gauge_change,
    density_from_wigner,
    stratonovich_phase,
    weyl_from_density,
    wigner_from_density,
    wigner_potential,
)
from .kernels import (
    KernelSet,
    LinearKernelCoefficients,
    TermMagnitudeReport,
    compute_kernels,
    electric_kernel,
    harmonic_coefficient,
    linear_coefficients,
    linear_term_report,
    magnetic_kernel,
    magnetic_square_from_convolution,
    magnetic_square_kernel,
    quadratic_coefficient,
    term_magnitudes,
)
from .states import gaussian_density, gaussian_wigner
from .solvers import (
    EvolutionResult,
    FredholmConvergenceError,
    FredholmResult,
    MCEstimate,
    SolverConfig,
    SolverInstabilityError,
    default_gamma0,
    evolve,
    mc_estimate_point,
    observables,
    rhs_continuum_fd,
    rhs_general,
    rhs_semidiscrete,
    solve_fredholm_resolvent,
    step_continuum,
    step_semidiscrete,
)
from .config import (
    ConfigError,
    SimulationConfig,
    load_config,
    write_config,
)
from .io import (
    read_state,
    read_table,
    relative_l2_diff,
    save_sampled_field,
    load_sampled_field,
    write_state,
    write_table,
)
from .runner import RunnerError, RunProduct, magnitude_report, run_simulation

__all__ = [
    "SI",
    "ConfigError",
    "DensityMatrix",
    "EvolutionResult",
    "FieldCoverageError",
    "FredholmConvergenceError",
    "FredholmResult",
    "GaugeSpec",
    "KernelSet",
    "LinearEMField",
    "LinearKernelCoefficients",
    "MCEstimate",
    "PhaseSpaceGrid",
    "PhysicalConstants",
    "RunProduct",
    "RunnerError",
    "SampledEMField",
    "SimulationConfig",
    "SolverConfig",
    "SolverInstabilityError",
    "TermMagnitudeReport",
    "TransformConsistencyError",
    "WignerPotentialTable",
    "WignerState",
    "apply_gauge_change",
    "compute_kernels",
    "default_gamma0",
    "density_from_wigner",
    "electric_kernel",
    "evolve",
    "gaussian_density",
    "gaussian_wigner",
    "harmonic_coefficient",
    "landau_gauge",
    "linear_coefficients",
    "linear_term_report",
    "load_config",
    "load_sampled_field",
    "magnetic_kernel",
    "magnetic_square_from_convolution",
    "magnetic_square_kernel",
    "magnitude_report",
    "make_grid",
    "mc_estimate_point",
    "observables",
    "quadratic_coefficient",
    "read_state",
    "read_table",
    "relative_l2_diff",
    "rhs_continuum_fd",
    "rhs_general",
    "rhs_semidiscrete",
    "run_simulation",
    "save_sampled_field",
    "solve_fredholm_resolvent",
    "step_continuum",
    "step_semidiscrete",
    "stratonovich_phase",
    "symmetric_gauge",
    "term_magnitudes",
    "weyl_from_density",
    "wigner_from_density",
    "wigner_potential",
    "write_config",
    "write_state",
    "write_table",
    "zero_gauge",
    "__version__",
]
