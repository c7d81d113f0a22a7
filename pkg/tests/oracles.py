"""Independent dense-matrix and finite-difference oracles used across tests.

Everything here is deliberately naive: explicit Kronecker products, explicit
stencils, no reuse of the package's own fast paths beyond type construction.
"""

from __future__ import annotations

import numpy as np

SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def dense_pauli(label: str) -> np.ndarray:
    """Dense matrix of a Pauli label; leftmost letter acts on qubit 0 (LSB)."""
    m = np.eye(1, dtype=complex)
    for ch in label.upper():
        m = np.kron(SINGLE[ch], m)
    return m


def dense_sum(n_qubits: int, terms) -> np.ndarray:
    """Dense matrix of sum_k c_k P_k given (coeff, label-or-PauliString) pairs."""
    m = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    for coeff, p in terms:
        label = p if isinstance(p, str) else p.label()
        m += coeff * dense_pauli(label)
    return m


def dense_1q(m: np.ndarray, q: int, n_qubits: int) -> np.ndarray:
    return np.kron(np.eye(2 ** (n_qubits - q - 1)), np.kron(m, np.eye(2**q)))


def dense_named(kind: str, qubits, n_qubits: int) -> np.ndarray:
    """Dense matrix of a named gate under the LSB qubit-0 convention."""
    dim = 2**n_qubits
    if kind == "H":
        return dense_1q(np.array([[1, 1], [1, -1]]) / np.sqrt(2), qubits[0], n_qubits)
    if kind == "S":
        return dense_1q(np.diag([1.0, 1.0j]), qubits[0], n_qubits)
    m = np.zeros((dim, dim), dtype=complex)
    if kind == "CZ":
        for i in range(dim):
            both = (i >> qubits[0]) & (i >> qubits[1]) & 1
            m[i, i] = -1.0 if both else 1.0
        return m
    if kind == "CNOT":
        control, target = qubits
        for i in range(dim):
            j = i ^ (1 << target) if (i >> control) & 1 else i
            m[j, i] = 1.0
        return m
    raise ValueError(kind)


def dense_element(el, theta, n_qubits: int) -> np.ndarray:
    """Dense matrix of one circuit element (an independent reimplementation)."""
    from scipy.linalg import expm

    from vqederiv.circuits import FixedRotation, NamedGate, Parametric

    if isinstance(el, Parametric):
        g = dense_sum(
            n_qubits, [(t.weight, t.string.label()) for t in el.generator]
        )
        return expm(1j * float(theta[el.param_index]) * g)
    if isinstance(el, FixedRotation):
        return expm(1j * el.angle * dense_pauli(el.string.label()))
    if isinstance(el, NamedGate):
        return dense_named(el.kind, el.qubits, n_qubits)
    raise TypeError(el)


def dense_circuit(circuit, theta) -> np.ndarray:
    """Full circuit unitary as an explicit matrix product."""
    dim = 2**circuit.n_qubits
    u = np.eye(dim, dtype=complex)
    for el in circuit.elements:
        u = dense_element(el, theta, circuit.n_qubits) @ u
    return u


def fd_gradient(f, x: np.ndarray, h: float) -> np.ndarray:
    """Central first differences of a scalar or vector function of a vector."""
    x = np.asarray(x, dtype=float)
    cols = []
    for a in range(x.size):
        e = np.zeros_like(x)
        e[a] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(f, x: np.ndarray, h: float) -> np.ndarray:
    """Central second differences of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.empty((n, n))
    f0 = f(x)
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = h
        out[a, a] = (f(x + ea) - 2 * f0 + f(x - ea)) / h**2
        for b in range(a + 1, n):
            eb = np.zeros(n)
            eb[b] = h
            val = (
                f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)
            ) / (4 * h**2)
            out[a, b] = out[b, a] = val
    return out


def fd_scalar(f, x: float, order: int, h: float) -> float:
    """Central difference of a scalar function of a scalar, order 1..3."""
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    if order == 2:
        return (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    if order == 3:
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (
            2 * h**3
        )
    raise ValueError(order)
