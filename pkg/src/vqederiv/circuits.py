"""Parameterized ansatz circuits and derivative-state preparation.

A circuit is an ordered list of gate elements acting on |0...0>.  Parametric
elements apply exp(i * theta_a * G_a) with G_a a real-weighted Pauli sum, so
the standard gates arrive through negative generator weights, e.g. Ry(theta)
is the generator [(-1/2, Y)].

Derivative states are produced by inserting extra operators immediately after
a parametric element: i*P for the states entering the derivative formulas, or
R(+/-) = exp(+/- i pi P / 4) for the shifted circuits of the low-depth scheme.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .kernel import (
    PauliString,
    Statevector,
    _apply_cnot_raw,
    _apply_cz_raw,
    _apply_pauli_raw,
    _apply_single_qubit_raw,
    _rotate_raw,
    zero_state,
)

_DENSE_GENERATOR_LIMIT = 12  # qubits; non-commuting generators need a dense expm

_H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
_S_MATRIX = np.array([[1.0, 0.0], [0.0, 1.0j]], dtype=complex)
_S_DAGGER = _S_MATRIX.conj().T


@dataclass(frozen=True)
class GeneratorTerm:
    """One weighted Pauli string inside a parametric-gate generator."""

    weight: float
    string: PauliString

    def __post_init__(self) -> None:
        if not np.isfinite(self.weight):
            raise ValueError(f"non-finite generator weight {self.weight}")
        if self.weight == 0.0:
            raise ValueError("generator weights must be nonzero")


@dataclass(frozen=True)
class Parametric:
    """exp(i * theta[param_index] * sum_mu weight_mu * P_mu)."""

    param_index: int
    generator: tuple[GeneratorTerm, ...]

    def __post_init__(self) -> None:
        if self.param_index < 0:
            raise ValueError(f"negative parameter index {self.param_index}")
        if not self.generator:
            raise ValueError("parametric element needs at least one generator term")


@dataclass(frozen=True)
class FixedRotation:
    """exp(i * angle * P) at a frozen angle."""

    angle: float
    string: PauliString

    def __post_init__(self) -> None:
        if not np.isfinite(self.angle):
            raise ValueError(f"non-finite rotation angle {self.angle}")


@dataclass(frozen=True)
class NamedGate:
    """A fixed member of {H, S, CNOT, CZ} acting on explicit qubits."""

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        expected = {"H": 1, "S": 1, "CNOT": 2, "CZ": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown named gate {self.kind!r}")
        if len(self.qubits) != expected[self.kind]:
            raise ValueError(
                f"{self.kind} takes {expected[self.kind]} qubit(s), "
                f"got {self.qubits}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.kind} on {self.qubits}")


GateElement = Union[Parametric, FixedRotation, NamedGate]


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list on n_qubits qubits with n_params free parameters.

    Every parameter index in [0, n_params) must be used by exactly one
    parametric element.
    """

    n_qubits: int
    elements: tuple[GateElement, ...]
    n_params: int = field(default=-1)

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        seen: list[int] = []
        for pos, el in enumerate(self.elements):
            if isinstance(el, Parametric):
                seen.append(el.param_index)
                for term in el.generator:
                    if term.string.n_qubits != self.n_qubits:
                        raise ValueError(
                            f"element {pos}: generator string "
                            f"{term.string.label()} does not act on "
                            f"{self.n_qubits} qubits"
                        )
            elif isinstance(el, FixedRotation):
                if el.string.n_qubits != self.n_qubits:
                    raise ValueError(
                        f"element {pos}: rotation string {el.string.label()} "
                        f"does not act on {self.n_qubits} qubits"
                    )
            elif isinstance(el, NamedGate):
                if any(q < 0 or q >= self.n_qubits for q in el.qubits):
                    raise ValueError(
                        f"element {pos}: qubits {el.qubits} out of range for "
                        f"{self.n_qubits} qubits"
                    )
            else:
                raise TypeError(f"element {pos}: unsupported type {type(el)!r}")
        inferred = len(seen)
        if self.n_params == -1:
            object.__setattr__(self, "n_params", inferred)
        if sorted(seen) != list(range(self.n_params)):
            raise ValueError(
                f"parameter indices {sorted(seen)} must cover 0..{self.n_params - 1} "
                "exactly once each"
            )

    def parametric_positions(self) -> dict[int, int]:
        """Map param_index -> element position."""
        return {
            el.param_index: pos
            for pos, el in enumerate(self.elements)
            if isinstance(el, Parametric)
        }


@dataclass(frozen=True)
class Insertion:
    """One operator insertion right after the element at `position`.

    mu selects a term of that element's generator; sign is only consulted by
    the shifted-circuit variant, where it picks R(+) or R(-).
    """

    position: int
    mu: int
    sign: int = 1

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")


@dataclass(frozen=True)
class InsertionSpec:
    """A multiset of insertions, kept sorted by position (stable for ties)."""

    entries: tuple[Insertion, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "entries",
            tuple(sorted(self.entries, key=lambda e: e.position)),
        )

    def __len__(self) -> int:
        return len(self.entries)


def _validate_insertions(circuit: Circuit, spec: InsertionSpec) -> None:
    for e in spec.entries:
        if e.position < 0 or e.position >= len(circuit.elements):
            raise ValueError(f"insertion position {e.position} out of range")
        el = circuit.elements[e.position]
        if not isinstance(el, Parametric):
            raise ValueError(
                f"insertion position {e.position} is not a parametric element"
            )
        if e.mu < 0 or e.mu >= len(el.generator):
            raise ValueError(
                f"generator term index {e.mu} out of range at position "
                f"{e.position} (generator has {len(el.generator)} terms)"
            )


def _check_theta(circuit: Circuit, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(
            f"theta has shape {theta.shape}, circuit has {circuit.n_params} "
            "parameters"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    return theta


@lru_cache(maxsize=128)
def _generator_plan(generator: tuple[GeneratorTerm, ...], n_qubits: int):
    """Classify a generator: single term, commuting terms, or dense expm.

    For the dense case returns the eigendecomposition of G so repeated
    applications only cost matrix-vector products.
    """
    if len(generator) == 1:
        return ("single", None)
    strings = [t.string for t in generator]
    commuting = all(
        strings[i].commutes_with(strings[j])
        for i in range(len(strings))
        for j in range(i + 1, len(strings))
    )
    if commuting:
        return ("commuting", None)
    if n_qubits > _DENSE_GENERATOR_LIMIT:
        raise ValueError(
            f"non-commuting generator on {n_qubits} qubits exceeds the dense "
            f"exponential limit of {_DENSE_GENERATOR_LIMIT}"
        )
    dim = 2**n_qubits
    g = np.zeros((dim, dim), dtype=complex)
    for term in generator:
        eye = np.eye(dim, dtype=complex)
        cols = np.stack(
            [_apply_pauli_raw(eye[:, k], term.string.axes) for k in range(dim)],
            axis=1,
        )
        g += term.weight * cols
    vals, vecs = np.linalg.eigh(g)
    return ("dense", (vals, vecs))


def _apply_parametric_raw(
    amps: np.ndarray, el: Parametric, angle: float, n_qubits: int
) -> np.ndarray:
    kind, data = _generator_plan(el.generator, n_qubits)
    if kind == "single":
        term = el.generator[0]
        return _rotate_raw(amps, term.string.axes, angle * term.weight)
    if kind == "commuting":
        out = amps
        for term in el.generator:
            out = _rotate_raw(out, term.string.axes, angle * term.weight)
        return out
    vals, vecs = data
    return vecs @ (np.exp(1j * angle * vals) * (vecs.conj().T @ amps))


def _apply_named_raw(amps: np.ndarray, el: NamedGate, n_qubits: int) -> np.ndarray:
    if el.kind == "H":
        return _apply_single_qubit_raw(amps, n_qubits, el.qubits[0], _H_MATRIX)
    if el.kind == "S":
        return _apply_single_qubit_raw(amps, n_qubits, el.qubits[0], _S_MATRIX)
    if el.kind == "CZ":
        return _apply_cz_raw(amps, n_qubits, el.qubits[0], el.qubits[1])
    return _apply_cnot_raw(amps, n_qubits, el.qubits[0], el.qubits[1])


def _apply_element_raw(
    amps: np.ndarray, el: GateElement, theta: np.ndarray, n_qubits: int
) -> np.ndarray:
    if isinstance(el, Parametric):
        return _apply_parametric_raw(amps, el, float(theta[el.param_index]), n_qubits)
    if isinstance(el, FixedRotation):
        return _rotate_raw(amps, el.string.axes, el.angle)
    return _apply_named_raw(amps, el, n_qubits)


def _apply_element_inverse_raw(
    amps: np.ndarray, el: GateElement, theta: np.ndarray, n_qubits: int
) -> np.ndarray:
    if isinstance(el, Parametric):
        return _apply_parametric_raw(amps, el, -float(theta[el.param_index]), n_qubits)
    if isinstance(el, FixedRotation):
        return _rotate_raw(amps, el.string.axes, -el.angle)
    if el.kind == "S":
        return _apply_single_qubit_raw(amps, n_qubits, el.qubits[0], _S_DAGGER)
    return _apply_named_raw(amps, el, n_qubits)  # H, CNOT, CZ are involutions


def _apply_generator_raw(
    amps: np.ndarray, generator: tuple[GeneratorTerm, ...]
) -> np.ndarray:
    """Raw action of G = sum_mu g_mu P_mu (not unitary, no i factor)."""
    out = np.zeros_like(amps)
    for term in generator:
        out += term.weight * _apply_pauli_raw(amps, term.string.axes)
    return out


def prepare_state(circuit: Circuit, theta: Sequence[float]) -> Statevector:
    """Run the circuit on |0...0> and return the final state."""
    theta = _check_theta(circuit, theta)
    amps = zero_state(circuit.n_qubits).amps
    for el in circuit.elements:
        amps = _apply_element_raw(amps, el, theta, circuit.n_qubits)
    nerr = abs(float(np.vdot(amps, amps).real) - 1.0)
    if nerr > 1e-12:
        raise ArithmeticError(f"state norm drifted by {nerr:.3e}")
    return Statevector(amps, circuit.n_qubits)


def prepare_phi_state(
    circuit: Circuit,
    theta: Sequence[float],
    insertions: InsertionSpec,
    shift_variant: bool = False,
) -> Statevector:
    """Run the circuit with operator insertions after selected elements.

    With shift_variant False each insertion applies i * P(position, mu); with
    True it applies R(sign) = exp(sign * i * pi/4 * P).  Insertions sharing a
    position are applied in listed order, the first listed acting first.
    """
    theta = _check_theta(circuit, theta)
    _validate_insertions(circuit, insertions)
    by_pos: dict[int, list[Insertion]] = {}
    for e in insertions.entries:
        by_pos.setdefault(e.position, []).append(e)
    amps = zero_state(circuit.n_qubits).amps
    for pos, el in enumerate(circuit.elements):
        amps = _apply_element_raw(amps, el, theta, circuit.n_qubits)
        for e in by_pos.get(pos, ()):
            axes = circuit.elements[e.position].generator[e.mu].string.axes
            if shift_variant:
                amps = _rotate_raw(amps, axes, e.sign * np.pi / 4)
            else:
                amps = 1j * _apply_pauli_raw(amps, axes)
    return Statevector(amps, circuit.n_qubits)


def wavefunction_derivative(
    circuit: Circuit, theta: Sequence[float], param_indices: Sequence[int]
) -> np.ndarray:
    """Raw amplitudes of the partial derivative of the prepared state.

    Differentiating exp(i theta_a G_a) inserts (i G_a) right after that gate,
    once per occurrence of a in param_indices.  The result is generally not
    normalized.
    """
    theta = _check_theta(circuit, theta)
    positions = circuit.parametric_positions()
    counts: dict[int, int] = {}
    for a in param_indices:
        if a not in positions:
            raise ValueError(f"unknown parameter index {a}")
        counts[positions[a]] = counts.get(positions[a], 0) + 1
    amps = zero_state(circuit.n_qubits).amps
    for pos, el in enumerate(circuit.elements):
        amps = _apply_element_raw(amps, el, theta, circuit.n_qubits)
        for _ in range(counts.get(pos, 0)):
            amps = 1j * _apply_generator_raw(amps, el.generator)
    return amps


def build_hardware_efficient(
    n_qubits: int, depth: int, entangler: str = "CZ"
) -> Circuit:
    """Alternating per-qubit Rx, Ry layers with linear-chain entanglers.

    depth+1 rotation layers separated by depth entangler layers, giving
    2 * n_qubits * (depth + 1) parameters.  Each rotation layer applies Rx
    then Ry on every qubit (generators -X/2 and -Y/2).
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if entangler not in ("CZ", "CNOT"):
        raise ValueError(f"unsupported entangler {entangler!r}")
    elements: list[GateElement] = []
    index = 0

    def rotation_layer() -> None:
        nonlocal index
        for q in range(n_qubits):
            for letter in ("X", "Y"):
                axes = tuple(
                    "IXYZ".index(letter) if k == q else 0 for k in range(n_qubits)
                )
                elements.append(
                    Parametric(index, (GeneratorTerm(-0.5, PauliString(axes)),))
                )
                index += 1

    rotation_layer()
    for _ in range(depth):
        for q in range(n_qubits - 1):
            elements.append(NamedGate(entangler, (q, q + 1)))
        rotation_layer()
    return Circuit(n_qubits, tuple(elements))


# JSON wire format


def circuit_to_json(circuit: Circuit) -> str:
    gates = []
    for el in circuit.elements:
        if isinstance(el, Parametric):
            gates.append(
                {
                    "type": "param",
                    "index": el.param_index,
                    "generator": [
                        {"g": t.weight, "pauli": t.string.label()}
                        for t in el.generator
                    ],
                }
            )
        elif isinstance(el, FixedRotation):
            gates.append(
                {"type": "rot", "angle": el.angle, "pauli": el.string.label()}
            )
        else:
            gates.append(
                {"type": "named", "kind": el.kind, "qubits": list(el.qubits)}
            )
    return json.dumps({"n_qubits": circuit.n_qubits, "gates": gates}, indent=2)


def circuit_from_json(text: str) -> Circuit:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid circuit JSON: {exc}") from None
    if not isinstance(data, dict) or "n_qubits" not in data or "gates" not in data:
        raise ValueError("circuit JSON must be an object with n_qubits and gates")
    n = data["n_qubits"]
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"invalid n_qubits {n!r}")
    elements: list[GateElement] = []
    for k, gate in enumerate(data["gates"]):
        try:
            kind = gate["type"]
            if kind == "param":
                terms = tuple(
                    GeneratorTerm(float(t["g"]), _parse_pauli(t["pauli"], n, k))
                    for t in gate["generator"]
                )
                elements.append(Parametric(int(gate["index"]), terms))
            elif kind == "rot":
                elements.append(
                    FixedRotation(float(gate["angle"]), _parse_pauli(gate["pauli"], n, k))
                )
            elif kind == "named":
                elements.append(NamedGate(gate["kind"], tuple(gate["qubits"])))
            else:
                raise ValueError(f"unknown gate type {kind!r}")
        except (KeyError, TypeError) as exc:
            raise ValueError(f"gate {k}: malformed entry ({exc})") from None
    return Circuit(n, tuple(elements))


def _parse_pauli(label: object, n_qubits: int, gate_index: int) -> PauliString:
    if not isinstance(label, str):
        raise ValueError(f"gate {gate_index}: pauli must be a string")
    if len(label) != n_qubits:
        raise ValueError(
            f"gate {gate_index}: pauli {label!r} has length {len(label)}, "
            f"expected {n_qubits}"
        )
    return PauliString.from_label(label)


def load_circuit(path) -> Circuit:
    with open(path, "r", encoding="utf-8") as fh:
        return circuit_from_json(fh.read())


def save_circuit(circuit: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(circuit_to_json(circuit) + "\n")
