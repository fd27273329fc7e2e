"""Sample-based quantum diagonalization at desk scale.

The package splits into a handful of layers: integral containers and
FCIDUMP parsing, bitstring determinants with Slater-Condon matrix
elements, projected-subspace diagonalization, a local unitary
cluster-Jastrow simulator with synthetic noise, self-consistent
configuration recovery, energy-variance extrapolation, and benchmark
statistics. The names re-exported here are the supported surface; the
`sqdforge` console script drives the whole pipeline from a manifest.
"""

from __future__ import annotations

from .benchstats import (
    Reaction,
    ReactionTable,
    SampleDiagnostics,
    StatProfile,
    ccsd_param_count,
    energy_errors,
    reaction_energy_errors,
    sample_diagnostics,
    stat_profile,
    subspace_plan,
)
from .determinants import (
    Determinant,
    DeterminantBasis,
    enumerate_connected,
    slater_condon,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    MissingDataError,
    ParseError,
    RecoveryError,
    ShapeError,
    SqdforgeError,
)
from .extrapolate import (
    ExtrapolationResult,
    LinearFit,
    gev_combine,
    gev_extrapolate,
    lmm_fit,
    ols_fit,
)
from .integrals import IntegralSet, parse_fcidump, write_fcidump
from .lucj import (
    LucjParams,
    NoiseModel,
    PairLayout,
    ResourceEstimate,
    SampleSet,
    SectorState,
    build_lucj_params,
    estimate_resources,
    sample_bitstrings,
    simulate_lucj_state,
)
from .recovery import OccupationVector, SqdPlan, SqdResult, recover_bitstring, run_sqd
from .subspace import (
    EnergyVariancePoint,
    SolverOptions,
    SubspaceWavefunction,
    apply_hamiltonian,
    build_basis,
    energy_and_variance,
    ground_state,
    project_hamiltonian,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ConvergenceError",
    "Determinant",
    "DeterminantBasis",
    "EnergyVariancePoint",
    "ExtrapolationResult",
    "IntegralSet",
    "LinearFit",
    "LucjParams",
    "MissingDataError",
    "NoiseModel",
    "OccupationVector",
    "PairLayout",
    "ParseError",
    "Reaction",
    "ReactionTable",
    "RecoveryError",
    "ResourceEstimate",
    "SampleDiagnostics",
    "SampleSet",
    "SectorState",
    "ShapeError",
    "SolverOptions",
    "SqdPlan",
    "SqdResult",
    "SqdforgeError",
    "StatProfile",
    "SubspaceWavefunction",
    "apply_hamiltonian",
    "build_basis",
    "build_lucj_params",
    "ccsd_param_count",
    "energy_and_variance",
    "energy_errors",
    "enumerate_connected",
    "estimate_resources",
    "gev_combine",
    "gev_extrapolate",
    "ground_state",
    "lmm_fit",
    "ols_fit",
    "parse_fcidump",
    "project_hamiltonian",
    "reaction_energy_errors",
    "recover_bitstring",
    "run_sqd",
    "sample_bitstrings",
    "sample_diagnostics",
    "simulate_lucj_state",
    "slater_condon",
    "stat_profile",
    "subspace_plan",
    "write_fcidump",
]
