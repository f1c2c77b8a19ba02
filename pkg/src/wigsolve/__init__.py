"""Deterministic spectral solver for the Wigner equation under singular potentials."""

__version__ = "0.1.0"

from .grid import (
    PhaseSpaceGrid,
    SpatialMesh,
    WavenumberMesh,
    WignerState,
    build_spatial_mesh,
    build_wavenumber_mesh,
    resample_uniform,
)
from .kernels import (
    DeltaPotential,
    GaussianBarrier,
    InversePowerPotential,
    InverseSquarePotential,
    KernelTable,
    LogPotential,
    MultiDeltaPotential2D,
    PhysicalConstants,
    annulus_points,
    kernel_coefficients,
    poisson_kernel_coefficients,
    wigner_kernel_value,
)
from .dynamics import SimulationConfig, SplitScheme, advect, apply_kernel, evolve, evolve_4d, step
from .observables import (
    FermiDiracSpec,
    GaussianPacketSpec,
    ObservableSeries,
    UniformMeshQuadrature,
    error_norms,
    init_fermi_dirac_4d,
    init_gaussian,
    partial_mass,
    spatial_marginal,
    spatial_marginal_2d,
    total_mass,
    uncertainty,
)
