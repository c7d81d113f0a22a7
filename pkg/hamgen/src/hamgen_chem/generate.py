"""Bond-length scans of qubit Hamiltonians in the vqederiv scan format.

Each grid point runs the full pipeline (integrals, SCF, MO transform,
dense many-body matrix, Pauli projection) at that geometry.  The union of
Pauli labels whose weight is ever visible on the grid becomes the term
list; coefficients are emitted as uniformly tabulated values so the
consumer can interpolate and differentiate them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import nuclear_charge, shell
from .fermion import dense_hamiltonian, pauli_coefficients, to_bk_basis
from .scf import integral_tables, mo_transform, rhf

ANGSTROM_TO_BOHR = 1.8897259886

# weights below this at every grid point are dropped from the term list
_WEIGHT_FLOOR = 1e-12

_MAPPINGS = ("jordan-wigner", "bravyi-kitaev")


@dataclass(frozen=True)
class MoleculeSpec:
    """Element symbols plus a coordinate template over the bond length.

    ``geometry(r)`` returns atom positions in Angstrom for bond length r
    in Angstrom; conversion to Bohr happens inside the pipeline.
    """

    symbols: tuple[str, ...]
    geometry: Callable[[float], np.ndarray]
    n_electrons: int


def _h2() -> MoleculeSpec:
    return MoleculeSpec(
        symbols=("H", "H"),
        geometry=lambda r: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, float(r)]]),
        n_electrons=2,
    )


MOLECULES: dict[str, Callable[[], MoleculeSpec]] = {"h2": _h2}


def qubit_coefficients(
    spec: MoleculeSpec, r: float, mapping: str = "jordan-wigner"
) -> dict[str, float]:
    """Pauli weights of the full Hamiltonian at bond length ``r`` (Angstrom)."""
    if mapping not in _MAPPINGS:
        raise ValueError(f"unknown mapping {mapping!r}, expected one of {_MAPPINGS}")
    if r <= 0.0:
        raise ValueError(f"bond length must be positive, got {r:g}")
    centers = np.asarray(spec.geometry(r), dtype=float) * ANGSTROM_TO_BOHR
    shells = [shell(sym, c) for sym, c in zip(spec.symbols, centers)]
    charges = [nuclear_charge(sym) for sym in spec.symbols]
    tables = integral_tables(shells, charges, centers)
    scf = rhf(tables, spec.n_electrons)
    if not scf.converged:
        raise RuntimeError(f"SCF did not converge at r = {r:g}")
    h_mo, g_mo = mo_transform(scf.coeffs, tables)
    ham = dense_hamiltonian(h_mo, g_mo, tables.e_nuclear)
    if mapping == "bravyi-kitaev":
        ham = to_bk_basis(ham)
    return pauli_coefficients(ham)


def bond_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Uniform bond-length grid; at least five points so the consumer can
    build third-derivative stencils from the table."""
    if step <= 0.0:
        raise ValueError(f"grid step must be positive, got {step:g}")
    if stop <= start:
        raise ValueError(f"grid range [{start:g}, {stop:g}] is empty")
    span = (stop - start) / step
    n_steps = int(round(span))
    if abs(span - n_steps) > 1e-9:
        raise ValueError(
            f"step {step:g} does not tile [{start:g}, {stop:g}] uniformly"
        )
    if n_steps + 1 < 5:
        raise ValueError(
            f"grid needs at least 5 points for derivative stencils, got {n_steps + 1}"
        )
    return start + step * np.arange(n_steps + 1)


def family_json(
    spec: MoleculeSpec,
    grid: np.ndarray,
    mapping: str = "jordan-wigner",
) -> str:
    """Scan file for ``spec`` over ``grid``, ready for the vqederiv CLI."""
    grid = np.asarray(grid, dtype=float)
    step = float(grid[1] - grid[0])
    tables = [qubit_coefficients(spec, float(r), mapping) for r in grid]
    n_qubits = len(next(iter(tables[0])))
    labels = sorted(
        label
        for label in tables[0]
        if label == "I" * n_qubits
        or max(abs(t[label]) for t in tables) > _WEIGHT_FLOOR
    )
    terms = [
        {
            "pauli": label,
            "coeff": {
                "tab": {
                    "x0": float(grid[0]),
                    "dx": step,
                    "values": [t[label] for t in tables],
                }
            },
        }
        for label in labels
    ]
    return json.dumps(
        {"n_qubits": n_qubits, "x_dim": 1, "terms": terms}, indent=2
    )
