"""Pauli-string algebra and a dense statevector simulator.

Qubit 0 is the least-significant bit of the amplitude index: the basis state
|b_{n-1} ... b_1 b_0> lives at index sum_q b_q 2**q.  Pauli-string labels are
written with the leftmost letter acting on qubit 0, so "XZ" means X on qubit 0
and Z on qubit 1.  All statevector operations return new arrays; nothing
mutates its input.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

AXIS_LABELS = "IXYZ"

# Single-qubit products P_row * P_col: resulting axis and the power of i picked up.
_MUL_AXIS = (
    (0, 1, 2, 3),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 1, 0),
)
_MUL_PHASE_POW = (
    (0, 0, 0, 0),
    (0, 0, 1, 3),
    (0, 3, 0, 1),
    (0, 1, 3, 0),
)
_I_POWERS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Pauli operators.

    axes[q] is the operator on qubit q, encoded 0=I, 1=X, 2=Y, 3=Z.
    """

    axes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.axes) == 0:
            raise ValueError("PauliString needs at least one qubit")
        if any(a not in (0, 1, 2, 3) for a in self.axes):
            raise ValueError(f"invalid axis codes in {self.axes}")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        try:
            axes = tuple(AXIS_LABELS.index(c) for c in label.upper())
        except ValueError:
            raise ValueError(f"invalid Pauli label {label!r}") from None
        return cls(axes)

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    def label(self) -> str:
        return "".join(AXIS_LABELS[a] for a in self.axes)

    def is_identity(self) -> bool:
        return all(a == 0 for a in self.axes)

    def commutes_with(self, other: "PauliString") -> bool:
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch")
        anti = sum(
            1 for a, b in zip(self.axes, other.axes) if a != 0 and b != 0 and a != b
        )
        return anti % 2 == 0

    def __str__(self) -> str:
        return self.label()


def pauli_mul(p1: PauliString, p2: PauliString) -> tuple[complex, PauliString]:
    """Product of two Pauli strings as (phase, string), phase in {1, i, -1, -i}."""
    if p1.n_qubits != p2.n_qubits:
        raise ValueError(f"qubit count mismatch: {p1.n_qubits} vs {p2.n_qubits}")
    pow_i = 0
    axes = []
    for a, b in zip(p1.axes, p2.axes):
        axes.append(_MUL_AXIS[a][b])
        pow_i += _MUL_PHASE_POW[a][b]
    return _I_POWERS[pow_i % 4], PauliString(tuple(axes))


class PauliSum:
    """A real-weighted sum of Pauli strings on a fixed qubit count.

    Terms are canonicalized on construction: duplicates merged, exact zeros
    dropped, order fixed by the axis encoding.  Immutable.
    """

    __slots__ = ("n_qubits", "terms")

    def __init__(
        self, n_qubits: int, terms: Iterable[tuple[float, PauliString]] = ()
    ) -> None:
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        merged: dict[tuple[int, ...], float] = {}
        for coeff, string in terms:
            if isinstance(coeff, complex):
                raise TypeError(f"coefficients must be real, got {coeff!r}")
            if string.n_qubits != n_qubits:
                raise ValueError(
                    f"term {string.label()} has {string.n_qubits} qubits, "
                    f"expected {n_qubits}"
                )
            merged[string.axes] = merged.get(string.axes, 0.0) + float(coeff)
        object.__setattr__(self, "n_qubits", n_qubits)
        object.__setattr__(
            self,
            "terms",
            tuple(
                (c, PauliString(axes))
                for axes, c in sorted(merged.items())
                if c != 0.0
            ),
        )

    def __setattr__(self, name, value):
        raise AttributeError("PauliSum is immutable")

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return PauliSum(self.n_qubits, list(self.terms) + list(other.terms))

    def __mul__(self, scale: float) -> "PauliSum":
        return PauliSum(self.n_qubits, [(scale * c, p) for c, p in self.terms])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliSum)
            and self.n_qubits == other.n_qubits
            and self.terms == other.terms
        )

    def __repr__(self) -> str:
        body = " + ".join(f"{c:g}*{p.label()}" for c, p in self.terms)
        return f"PauliSum({self.n_qubits}, {body or '0'})"

    def one_norm(self) -> float:
        """Sum of absolute coefficients."""
        return float(sum(abs(c) for c, _ in self.terms))

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        """Raw linear action on an amplitude array (output not normalized)."""
        out = np.zeros_like(amps)
        for coeff, string in self.terms:
            out += coeff * _apply_pauli_raw(amps, string.axes)
        return out

    def expect_amps(self, amps: np.ndarray) -> float:
        acc = 0.0 + 0.0j
        for coeff, string in self.terms:
            acc += coeff * np.vdot(amps, _apply_pauli_raw(amps, string.axes))
        if abs(acc.imag) > 1e-12:
            raise ArithmeticError(f"expectation has imaginary residue {acc.imag:.3e}")
        return float(acc.real)


@dataclass
class Statevector:
    """Dense state on n_qubits qubits; amps[i] is the amplitude of basis index i."""

    amps: np.ndarray
    n_qubits: int

    def __post_init__(self) -> None:
        if self.amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude array of shape {self.amps.shape} does not match "
                f"{self.n_qubits} qubits"
            )

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def copy(self) -> "Statevector":
        return Statevector(self.amps.copy(), self.n_qubits)


def zero_state(n_qubits: int) -> Statevector:
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    if n_qubits > 24:
        raise ValueError(f"{n_qubits} qubits exceeds the dense simulation limit")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(amps, n_qubits)


@lru_cache(maxsize=32)
def _indices(n_qubits: int) -> np.ndarray:
    # Shared read-only index array; never mutate.
    return np.arange(2**n_qubits, dtype=np.uint32)


def _parity(values: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(values) & np.uint32(1)).astype(bool)


def _apply_pauli_raw(amps: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Apply a Pauli string to a raw amplitude array."""
    n = len(axes)
    xmask = np.uint32(0)
    signmask = np.uint32(0)  # qubits contributing (-1)^bit: Y and Z
    n_y = 0
    for q, a in enumerate(axes):
        if a == 1:
            xmask |= np.uint32(1 << q)
        elif a == 2:
            xmask |= np.uint32(1 << q)
            signmask |= np.uint32(1 << q)
            n_y += 1
        elif a == 3:
            signmask |= np.uint32(1 << q)
    idx = _indices(n)
    out = amps
    if signmask:
        signs = np.where(_parity(idx & signmask), -1.0, 1.0)
        out = out * signs
    else:
        out = out.copy()
    if n_y % 4:
        out *= _I_POWERS[n_y % 4]
    if xmask:
        out = out[idx ^ xmask]
    return out


def apply_pauli(state: Statevector, p: PauliString) -> Statevector:
    """Return P|state>."""
    if p.n_qubits != state.n_qubits:
        raise ValueError(
            f"Pauli string on {p.n_qubits} qubits applied to a "
            f"{state.n_qubits}-qubit state"
        )
    return Statevector(_apply_pauli_raw(state.amps, p.axes), state.n_qubits)


def apply_pauli_rotation(state: Statevector, p: PauliString, angle: float) -> Statevector:
    """Return exp(i*angle*P)|state> = cos(angle)|state> + i sin(angle) P|state>."""
    if not np.isfinite(angle):
        raise ValueError(f"non-finite rotation angle {angle}")
    if p.n_qubits != state.n_qubits:
        raise ValueError("qubit count mismatch")
    amps = _rotate_raw(state.amps, p.axes, angle)
    return Statevector(amps, state.n_qubits)


def _rotate_raw(amps: np.ndarray, axes: tuple[int, ...], angle: float) -> np.ndarray:
    return np.cos(angle) * amps + (1j * np.sin(angle)) * _apply_pauli_raw(amps, axes)


def expectation(state: Statevector, h: PauliSum) -> float:
    """Real expectation <state|H|state> of a Pauli-sum observable."""
    if h.n_qubits != state.n_qubits:
        raise ValueError("qubit count mismatch")
    nerr = abs(state.norm_sq() - 1.0)
    if nerr > 1e-9:
        raise ValueError(f"state is not normalized (|norm^2 - 1| = {nerr:.3e})")
    return h.expect_amps(state.amps)


def sample_expectation(
    state: Statevector, p: PauliString, shots: int, seed: int
) -> float:
    """Estimate <P> from `shots` simulated +/-1 eigenvalue draws.

    The draw count is binomial with success probability (1 + <P>)/2, taken from
    a generator seeded only by `seed`, so repeated calls with identical
    arguments are bit-identical.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    exact = expectation(state, PauliSum(state.n_qubits, [(1.0, p)]))
    p_up = min(1.0, max(0.0, 0.5 * (1.0 + exact)))
    rng = np.random.default_rng(seed)
    ups = int(rng.binomial(shots, p_up))
    return (2.0 * ups - shots) / shots


# Raw single- and two-qubit gate helpers used by the circuit layer.


def _apply_single_qubit_raw(
    amps: np.ndarray, n: int, q: int, m: np.ndarray
) -> np.ndarray:
    resh = amps.reshape(2 ** (n - q - 1), 2, 2**q)
    out = np.empty_like(resh)
    out[:, 0, :] = m[0, 0] * resh[:, 0, :] + m[0, 1] * resh[:, 1, :]
    out[:, 1, :] = m[1, 0] * resh[:, 0, :] + m[1, 1] * resh[:, 1, :]
    return out.reshape(amps.shape)


def _apply_cz_raw(amps: np.ndarray, n: int, q0: int, q1: int) -> np.ndarray:
    idx = _indices(n)
    both = ((idx >> np.uint32(q0)) & (idx >> np.uint32(q1)) & np.uint32(1)).astype(bool)
    out = amps.copy()
    out[both] = -out[both]
    return out


def _apply_cnot_raw(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    idx = _indices(n)
    sel = ((idx >> np.uint32(control)) & np.uint32(1)).astype(bool)
    out = amps.copy()
    out[idx[sel]] = amps[idx[sel] ^ np.uint32(1 << target)]
    return out
