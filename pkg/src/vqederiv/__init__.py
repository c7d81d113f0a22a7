"""Analytical energy derivatives for variational quantum eigensolvers.

The library computes exact gradients, Hessians, and third derivatives of
optimized circuit energies with respect to Hamiltonian parameters, via
parameter responses rather than finite differences, on an exact statevector
backend and on two measurement-style backends (ancilla interference and
low-depth shifted circuits).
"""

from .circuits import (
    Circuit,
    FixedRotation,
    GeneratorTerm,
    Insertion,
    InsertionSpec,
    NamedGate,
    Parametric,
    circuit_from_json,
    circuit_to_json,
    load_circuit,
    prepare_phi_state,
    prepare_state,
    save_circuit,
    wavefunction_derivative,
)
from .continuation import (
    ContinuationStep,
    ContinuationTrajectory,
    DriftWarning,
    continuation_scan,
    euler_step,
)
from .energy_derivatives import (
    BranchJumpError,
    DerivativeBundle,
    FdReport,
    StationarityError,
    StationarityWarning,
    cost_estimate,
    energy_derivatives,
    fd_validate,
    taylor_pes,
)
from .excited import (
    DeflatedOperator,
    VqdLevel,
    VqdStack,
    default_beta,
    excited_derivatives,
    inner_product_terms,
    overlap,
    vqd_optimize,
)
from .hamiltonians import (
    HamiltonianFamily,
    Polynomial,
    Tabulated,
    family_from_json,
    family_to_json,
    load_family,
    save_family,
)
from .kernel import PauliString, PauliSum, Statevector, zero_state
from .optimize import (
    OptimizationResult,
    OptimizerConfig,
    check_stationarity,
    energy,
    gradient_theta,
    optimize,
)
from .response import (
    PseudoinverseFallbackWarning,
    first_response,
    gamma_tensor,
    m1_matrix,
    second_response,
    solve_hessian_system,
)
from .theta_derivatives import (
    Backend,
    DerivativeEngine,
    ThetaTensors,
    branch_pair_expectation,
    calibrate_lowdepth_sign,
    compute_theta_tensors,
    hessian_theta,
    lowdepth_pair,
    mixed_theta_x,
    third_theta,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BranchJumpError",
    "Circuit",
    "ContinuationStep",
    "ContinuationTrajectory",
    "DeflatedOperator",
    "DerivativeBundle",
    "DerivativeEngine",
    "DriftWarning",
    "FdReport",
    "FixedRotation",
    "GeneratorTerm",
    "HamiltonianFamily",
    "Insertion",
    "InsertionSpec",
    "NamedGate",
    "OptimizationResult",
    "OptimizerConfig",
    "Parametric",
    "PauliString",
    "PauliSum",
    "Polynomial",
    "PseudoinverseFallbackWarning",
    "Statevector",
    "StationarityError",
    "StationarityWarning",
    "Tabulated",
    "ThetaTensors",
    "VqdLevel",
    "VqdStack",
    "branch_pair_expectation",
    "calibrate_lowdepth_sign",
    "check_stationarity",
    "circuit_from_json",
    "circuit_to_json",
    "compute_theta_tensors",
    "continuation_scan",
    "cost_estimate",
    "default_beta",
    "energy",
    "energy_derivatives",
    "euler_step",
    "excited_derivatives",
    "family_from_json",
    "family_to_json",
    "fd_validate",
    "first_response",
    "gamma_tensor",
    "gradient_theta",
    "hessian_theta",
    "inner_product_terms",
    "load_circuit",
    "load_family",
    "lowdepth_pair",
    "m1_matrix",
    "mixed_theta_x",
    "optimize",
    "overlap",
    "prepare_phi_state",
    "prepare_state",
    "save_circuit",
    "save_family",
    "second_response",
    "solve_hessian_system",
    "taylor_pes",
    "third_theta",
    "vqd_optimize",
    "wavefunction_derivative",
    "zero_state",
]
