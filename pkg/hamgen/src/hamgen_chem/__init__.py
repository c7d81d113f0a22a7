"""Qubit Hamiltonian scans for small molecules in minimal Gaussian bases.

The package computes restricted Hartree-Fock references from closed-form
s-type Gaussian integrals, builds the exact second-quantized Hamiltonian
as a dense matrix over occupation-number states, projects it onto Pauli
strings under a fermion-to-qubit encoding, and tabulates the coefficients
over a bond-length grid in the scan-file format consumed by vqederiv.
"""

from .basis import Shell, nuclear_charge, shell
from .fermion import (
    bk_encoding_matrix,
    dense_hamiltonian,
    pauli_coefficients,
    pauli_matrix,
    to_bk_basis,
)
from .generate import (
    MOLECULES,
    MoleculeSpec,
    bond_grid,
    family_json,
    qubit_coefficients,
)
from .scf import IntegralTables, SCFResult, integral_tables, mo_transform, rhf

__version__ = "0.1.0"

__all__ = [
    "IntegralTables",
    "MOLECULES",
    "MoleculeSpec",
    "SCFResult",
    "Shell",
    "bk_encoding_matrix",
    "bond_grid",
    "dense_hamiltonian",
    "family_json",
    "integral_tables",
    "mo_transform",
    "nuclear_charge",
    "pauli_coefficients",
    "pauli_matrix",
    "qubit_coefficients",
    "rhf",
    "shell",
    "to_bk_basis",
]
