"""Restricted Hartree-Fock over a fixed list of shells.

Closed-shell only.  The generalized eigenproblem F C = S C eps is solved
directly; no level shifting or DIIS, which is plenty for the few-orbital
systems this package targets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .basis import Shell
from .integrals import kinetic, nuclear_attraction, overlap, repulsion


@dataclass(frozen=True)
class IntegralTables:
    """AO-basis integrals plus the nuclear repulsion constant."""

    overlap: np.ndarray
    core: np.ndarray
    repulsion: np.ndarray
    e_nuclear: float


@dataclass(frozen=True)
class SCFResult:
    energy: float
    electronic: float
    coeffs: np.ndarray
    orbital_energies: np.ndarray
    converged: bool
    n_iter: int


def nuclear_repulsion(charges, centers) -> float:
    charges = np.asarray(charges, dtype=float)
    centers = np.asarray(centers, dtype=float)
    total = 0.0
    for i, j in itertools.combinations(range(len(charges)), 2):
        total += charges[i] * charges[j] / np.linalg.norm(centers[i] - centers[j])
    return total


def integral_tables(shells, charges, centers) -> IntegralTables:
    """All AO integrals for ``shells`` in a field of point charges (Bohr)."""
    n = len(shells)
    s = np.empty((n, n))
    t = np.empty((n, n))
    v = np.zeros((n, n))
    for i, j in itertools.product(range(n), repeat=2):
        s[i, j] = overlap(shells[i], shells[j])
        t[i, j] = kinetic(shells[i], shells[j])
        for charge, center in zip(charges, centers):
            v[i, j] += nuclear_attraction(shells[i], shells[j], center, charge)
    eri = np.empty((n, n, n, n))
    for p, q, r, w in itertools.product(range(n), repeat=4):
        eri[p, q, r, w] = repulsion(shells[p], shells[q], shells[r], shells[w])
    return IntegralTables(s, t + v, eri, nuclear_repulsion(charges, centers))


def rhf(
    tables: IntegralTables,
    n_electrons: int,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> SCFResult:
    if n_electrons < 2 or n_electrons % 2:
        raise ValueError(f"restricted SCF needs an even electron count, got {n_electrons}")
    n_occ = n_electrons // 2
    core = tables.core
    eri = tables.repulsion
    density = np.zeros_like(core)
    eps = np.zeros(core.shape[0])
    coeffs = np.eye(core.shape[0])
    e_elec = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        coulomb = np.einsum("pqrs,rs->pq", eri, density)
        exchange = np.einsum("prqs,rs->pq", eri, density)
        fock = core + coulomb - 0.5 * exchange
        e_new = 0.5 * float(np.sum(density * (core + fock)))
        eps, coeffs = linalg.eigh(fock, tables.overlap)
        occupied = coeffs[:, :n_occ]
        density_new = 2.0 * occupied @ occupied.T
        shift = float(np.max(np.abs(density_new - density)))
        if abs(e_new - e_elec) < tol and shift < 1e-10:
            e_elec = e_new
            converged = True
            break
        e_elec = e_new
        density = density_new
    return SCFResult(
        energy=e_elec + tables.e_nuclear,
        electronic=e_elec,
        coeffs=coeffs,
        orbital_energies=eps,
        converged=converged,
        n_iter=it,
    )


def mo_transform(coeffs: np.ndarray, tables: IntegralTables):
    """Core Hamiltonian and repulsion integrals in the MO basis."""
    h_mo = coeffs.T @ tables.core @ coeffs
    g_mo = np.einsum(
        "pi,qj,rk,sl,pqrs->ijkl",
        coeffs,
        coeffs,
        coeffs,
        coeffs,
        tables.repulsion,
        optimize=True,
    )
    return h_mo, g_mo
