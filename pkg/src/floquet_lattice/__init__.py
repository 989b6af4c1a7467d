"""Boundary-driven tight-binding lattice simulator.

Time-domain propagation of an open chain whose two edge sites carry
harmonically oscillating on-site energies, quasi-energy (one-period
operator) analysis, a high-frequency closed-form oracle for the three-site
chain, and reproducible parameter-scan experiments with CSV/manifest
output.
"""

__version__ = "0.1.0"

from .effective import (
    EffectiveParams,
    RotatingTrajectory,
    analytic_p1,
    effective_params,
    effective_propagate,
)
from .errors import (
    IntegrationFailure,
    NumericsError,
    ScanInterrupted,
    ValidationError,
)
from .experiments import (
    ScanConfig,
    ScanResult,
    figure_config,
    figure_scan_config,
    landmark_zeros,
    reproduce,
    scan_min_p1,
    scan_spectrum,
)
from .floquet import (
    Branch,
    BranchSet,
    ClosestApproach,
    FloquetMode,
    MonodromyOperator,
    averaged_populations,
    classify_closest_approach,
    floquet_modes,
    fold_quasienergy,
    monodromy,
    track_branches,
)
from .model import (
    HamiltonianMatrix,
    SystemSpec,
    hamiltonian_at,
    spec_from_json,
    spec_to_json,
    static_hamiltonian,
    validate,
)
from .propagator import (
    StateVector,
    Trajectory,
    basis_state,
    min_population,
    propagate,
    propagation_norm_drift,
    site_population_series,
)
from .specfun import BesselEval, bessel_eval, bessel_j, j0_zero

__all__ = [
    "__version__",
    "BesselEval",
    "Branch",
    "BranchSet",
    "ClosestApproach",
    "EffectiveParams",
    "FloquetMode",
    "HamiltonianMatrix",
    "IntegrationFailure",
    "MonodromyOperator",
    "NumericsError",
    "RotatingTrajectory",
    "ScanConfig",
    "ScanInterrupted",
    "ScanResult",
    "StateVector",
    "SystemSpec",
    "Trajectory",
    "ValidationError",
    "analytic_p1",
    "averaged_populations",
    "basis_state",
    "bessel_eval",
    "bessel_j",
    "classify_closest_approach",
    "effective_params",
    "effective_propagate",
    "figure_config",
    "figure_scan_config",
    "floquet_modes",
    "fold_quasienergy",
    "hamiltonian_at",
    "j0_zero",
    "landmark_zeros",
    "min_population",
    "monodromy",
    "propagate",
    "propagation_norm_drift",
    "reproduce",
    "scan_min_p1",
    "scan_spectrum",
    "site_population_series",
    "spec_from_json",
    "spec_to_json",
    "static_hamiltonian",
    "track_branches",
    "validate",
]
