"""Symmetry-reduced Fourier-Galerkin diagnostics on the truncated cubic lattice."""

from .ensemble import EnsembleSpec, VelocityField, energy, enstrophy, sample_field
from .galerkin import BlowupError, DiagnosticsRecord, EvolutionConfig, evolve
from .harness import McRow, McSummary, golden_tables, monte_carlo, power_law_fit, sobolev_plateau_check
from .incidence import gamma_matrix, incidence_sum, r2, triad_count, weighted_incidence
from .lattice import GroupElement, LatticeIndex, Orbit, burnside_orbit_count, enumerate_lattice, octahedral_group
from .transfer import StretchDiagnostics, TransferMatrices, raw_transfer, split_transfer, stretch_diagnostics

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "DiagnosticsRecord",
    "EnsembleSpec",
    "EvolutionConfig",
    "GroupElement",
    "LatticeIndex",
    "McRow",
    "McSummary",
    "Orbit",
    "StretchDiagnostics",
    "TransferMatrices",
    "VelocityField",
    "burnside_orbit_count",
    "energy",
    "enstrophy",
    "enumerate_lattice",
    "evolve",
    "gamma_matrix",
    "golden_tables",
    "incidence_sum",
    "monte_carlo",
    "octahedral_group",
    "power_law_fit",
    "r2",
    "raw_transfer",
    "sample_field",
    "sobolev_plateau_check",
    "split_transfer",
    "stretch_diagnostics",
    "triad_count",
    "weighted_incidence",
]
