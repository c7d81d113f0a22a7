"""Dense second-quantized operators and their Pauli projections.

Spin orbital 2p + s (s = 0 alpha, 1 beta) of spatial orbital p occupies
qubit 2p + s.  Occupation-number basis states are indexed with qubit k as
bit k, least significant first, and the leftmost letter of a Pauli label
acts on qubit 0.  Ladder operators carry the sign of the occupied modes
below them, so the direct projection of the dense Hamiltonian is exactly
the Jordan-Wigner image; the tree encoding is applied afterwards as a
basis permutation, which preserves the spectrum by construction.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli_matrix(label: str) -> np.ndarray:
    matrix = np.eye(1, dtype=complex)
    for letter in label:
        try:
            factor = _PAULI[letter]
        except KeyError:
            raise ValueError(f"invalid Pauli letter {letter!r} in {label!r}") from None
        # left letter = qubit 0 = least significant bit, so it goes innermost
        matrix = np.kron(factor, matrix)
    return matrix


@functools.lru_cache(maxsize=4)
def _pauli_basis(n_qubits: int):
    labels = tuple(
        "".join(chars) for chars in itertools.product("IXYZ", repeat=n_qubits)
    )
    stack = np.stack([pauli_matrix(label) for label in labels])
    return labels, stack


def annihilation_operators(n_modes: int) -> list[np.ndarray]:
    dim = 1 << n_modes
    ops = []
    for p in range(n_modes):
        bit = 1 << p
        below = bit - 1
        op = np.zeros((dim, dim))
        for m in range(dim):
            if m & bit:
                sign = -1.0 if bin(m & below).count("1") % 2 else 1.0
                op[m ^ bit, m] = sign
        ops.append(op)
    return ops


def dense_hamiltonian(h_mo: np.ndarray, g_mo: np.ndarray, constant: float) -> np.ndarray:
    """Exact many-body Hamiltonian over all occupation-number states.

    ``h_mo`` and ``g_mo`` are spatial MO integrals, ``g_mo`` in chemist
    index order (pq|rs); ``constant`` is the nuclear repulsion.
    """
    n_spatial = h_mo.shape[0]
    n_modes = 2 * n_spatial
    lower = annihilation_operators(n_modes)
    raise_ = [op.T for op in lower]
    dim = 1 << n_modes
    ham = constant * np.eye(dim)
    for p, q in itertools.product(range(n_spatial), repeat=2):
        for s in (0, 1):
            ham += h_mo[p, q] * raise_[2 * p + s] @ lower[2 * q + s]
    for p, q, r, w in itertools.product(range(n_spatial), repeat=4):
        value = 0.5 * g_mo[p, q, r, w]
        if value == 0.0:
            continue
        for s, t in itertools.product((0, 1), repeat=2):
            ham += value * (
                raise_[2 * p + s]
                @ raise_[2 * r + t]
                @ lower[2 * w + t]
                @ lower[2 * q + s]
            )
    return ham


def pauli_coefficients(ham: np.ndarray, imag_tol: float = 1e-12) -> dict[str, float]:
    """Project a dense Hamiltonian onto the full Pauli-string basis.

    Returns every label; callers decide which weights to keep.  Raises if
    any projection has an imaginary part above ``imag_tol``, which would
    mean the input is not Hermitian.
    """
    dim = ham.shape[0]
    n_qubits = dim.bit_length() - 1
    if 1 << n_qubits != dim:
        raise ValueError(f"dense Hamiltonian size {dim} is not a power of two")
    labels, stack = _pauli_basis(n_qubits)
    coeffs = np.einsum("kij,ji->k", stack, ham) / dim
    worst = float(np.max(np.abs(coeffs.imag)))
    if worst > imag_tol:
        raise ValueError(f"Pauli projection has imaginary weight {worst:.3e}")
    return dict(zip(labels, coeffs.real))


def bk_encoding_matrix(n_modes: int) -> np.ndarray:
    """Binary tree over GF(2): row i lists the occupations summed into bit i."""
    matrix = np.array([[1]], dtype=np.int64)
    size = 1
    while size < n_modes:
        zero = np.zeros((size, size), dtype=np.int64)
        matrix = np.block([[matrix, zero], [zero, matrix]])
        matrix[2 * size - 1, :size] = 1
        size *= 2
    return matrix[:n_modes, :n_modes]


def to_bk_basis(ham: np.ndarray) -> np.ndarray:
    """Conjugate by the tree-encoding basis permutation."""
    dim = ham.shape[0]
    n_modes = dim.bit_length() - 1
    if 1 << n_modes != dim:
        raise ValueError(f"dense Hamiltonian size {dim} is not a power of two")
    encoding = bk_encoding_matrix(n_modes)
    weights = 1 << np.arange(n_modes)
    perm = np.empty(dim, dtype=np.int64)
    for m in range(dim):
        bits = (m >> np.arange(n_modes)) & 1
        perm[m] = int(((encoding @ bits) % 2) @ weights)
    out = np.zeros_like(ham)
    out[np.ix_(perm, perm)] = ham
    return out
