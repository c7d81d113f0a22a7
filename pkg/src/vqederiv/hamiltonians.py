"""Parameter-dependent Hamiltonian families H(x) = sum_P h_P(x) P.

Coefficients are either exact polynomials in the external parameters x or
uniform-grid tables of a single parameter.  Tabulated coefficients evaluate by
cubic local interpolation and differentiate by 3-point central differences,
which shrinks the usable grid by one point per side; the third derivative
composes the second- and first-order stencils, so it costs two points per
side and needs at least a 5-point table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .kernel import PauliString, PauliSum


@dataclass(frozen=True)
class Polynomial:
    """sum_k c_k * prod_i x_i**powers_k[i], exact under differentiation."""

    x_dim: int
    monomials: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self) -> None:
        if self.x_dim < 0:
            raise ValueError("x_dim must be >= 0")
        for powers, c in self.monomials:
            if len(powers) != self.x_dim:
                raise ValueError(
                    f"monomial powers {powers} do not match x_dim {self.x_dim}"
                )
            if any(p < 0 for p in powers):
                raise ValueError(f"negative power in {powers}")
            if isinstance(c, complex):
                raise TypeError(f"coefficients must be real, got {c!r}")

    def __call__(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for powers, c in self.monomials:
            total += c * float(np.prod([xi**p for xi, p in zip(x, powers)]))
        return total

    def derivative(self, q: tuple[int, ...]) -> "Polynomial":
        if len(q) != self.x_dim:
            raise ValueError(f"multi-index {q} does not match x_dim {self.x_dim}")
        out = []
        for powers, c in self.monomials:
            new_powers = []
            coeff = c
            for p, k in zip(powers, q):
                if p < k:
                    coeff = 0.0
                    break
                for j in range(k):
                    coeff *= p - j
                new_powers.append(p - k)
            if coeff != 0.0:
                out.append((tuple(new_powers), coeff))
        return Polynomial(self.x_dim, tuple(out))


@dataclass(frozen=True)
class Tabulated:
    """Samples of a single-parameter coefficient on a uniform grid."""

    x0: float
    dx: float
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.dx <= 0:
            raise ValueError(f"grid spacing must be positive, got {self.dx}")
        if len(self.values) < 2:
            raise ValueError("tabulated coefficient needs at least 2 samples")
        if not all(np.isfinite(v) for v in self.values):
            raise ValueError("tabulated values must be finite")

    @property
    def x_dim(self) -> int:
        return 1

    @classmethod
    def from_grid(cls, grid: Sequence[float], values: Sequence[float]) -> "Tabulated":
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size != len(values):
            raise ValueError("grid and values must be 1-d and equally long")
        if grid.size >= 2:
            steps = np.diff(grid)
            if np.any(steps <= 0):
                raise ValueError("grid must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-12:
                raise ValueError("grid spacing is not uniform within 1e-12")
            dx = float(steps[0])
        else:
            raise ValueError("grid needs at least 2 points")
        return cls(float(grid[0]), dx, tuple(float(v) for v in values))

    def grid(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.values))

    def __call__(self, x: np.ndarray) -> float:
        xv = float(np.asarray(x, dtype=float).reshape(-1)[0])
        m = len(self.values)
        hi = self.x0 + self.dx * (m - 1)
        if xv < self.x0 - 1e-12 or xv > hi + 1e-12:
            raise ValueError(
                f"x = {xv} outside the tabulated range [{self.x0}, {hi}]"
            )
        # Cubic Lagrange interpolation on the 4 nodes around the bracket,
        # clamped at the edges; degrades gracefully on very short tables.
        t = (xv - self.x0) / self.dx
        i = int(np.clip(np.floor(t), 0, m - 2))
        lo = int(np.clip(i - 1, 0, max(0, m - 4)))
        nodes = np.arange(lo, min(lo + 4, m))
        vals = np.array([self.values[k] for k in nodes])
        total = 0.0
        for a, na in enumerate(nodes):
            weight = 1.0
            for nb in nodes:
                if nb != na:
                    weight *= (t - nb) / (na - nb)
            total += weight * vals[a]
        return float(total)

    def derivative(self, q: tuple[int, ...]) -> "Tabulated":
        if len(q) != 1:
            raise ValueError(f"tabulated coefficients are single-parameter, got {q}")
        order = q[0]
        if order == 0:
            return self
        if order > 3:
            raise ValueError(
                f"tabulated coefficients support derivative orders <= 3, got {order}"
            )
        if order == 3:
            return self.derivative((2,)).derivative((1,))
        v = np.asarray(self.values)
        if len(v) < 3:
            raise ValueError("need at least 3 samples to differentiate a table")
        if order == 1:
            inner = (v[2:] - v[:-2]) / (2.0 * self.dx)
        else:
            inner = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / self.dx**2
        return Tabulated(self.x0 + self.dx, self.dx, tuple(float(u) for u in inner))


CoefficientFunction = Union[Polynomial, Tabulated]


@dataclass(frozen=True)
class HamiltonianFamily:
    """A fixed set of Pauli strings with x-dependent real coefficients."""

    n_qubits: int
    x_dim: int
    terms: tuple[tuple[PauliString, CoefficientFunction], ...]

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.x_dim < 1:
            raise ValueError("x_dim must be positive")
        for k, (string, coeff) in enumerate(self.terms):
            if string.n_qubits != self.n_qubits:
                raise ValueError(
                    f"term {k}: pauli {string.label()} has {string.n_qubits} "
                    f"qubits, expected {self.n_qubits}"
                )
            if isinstance(coeff, Tabulated) and self.x_dim != 1:
                raise ValueError(
                    f"term {k}: tabulated coefficients require x_dim = 1"
                )
            if isinstance(coeff, Polynomial) and coeff.x_dim != self.x_dim:
                raise ValueError(
                    f"term {k}: polynomial in {coeff.x_dim} variables, "
                    f"family has x_dim {self.x_dim}"
                )

    def _check_x(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.x_dim,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.x_dim},)")
        return x

    def eval(self, x) -> PauliSum:
        """Instantiate the family at x; exactly-zero coefficients are dropped."""
        x = self._check_x(x)
        return PauliSum(
            self.n_qubits, [(coeff(x), string) for string, coeff in self.terms]
        )

    def derivative(self, q: Sequence[int]) -> "HamiltonianFamily":
        """Term-wise coefficient derivative for the multi-index q."""
        q = tuple(int(k) for k in q)
        if len(q) != self.x_dim:
            raise ValueError(f"multi-index {q} does not match x_dim {self.x_dim}")
        if any(k < 0 for k in q):
            raise ValueError(f"negative entry in multi-index {q}")
        if sum(q) > 3:
            raise ValueError(f"derivative order {sum(q)} exceeds the supported 3")
        return HamiltonianFamily(
            self.n_qubits,
            self.x_dim,
            tuple((string, coeff.derivative(q)) for string, coeff in self.terms),
        )


def family_to_json(family: HamiltonianFamily) -> str:
    terms = []
    for string, coeff in family.terms:
        if isinstance(coeff, Polynomial):
            body = {
                "poly": [
                    {"powers": list(powers), "c": c} for powers, c in coeff.monomials
                ]
            }
        else:
            body = {
                "tab": {
                    "x0": coeff.x0,
                    "dx": coeff.dx,
                    "values": list(coeff.values),
                }
            }
        terms.append({"pauli": string.label(), "coeff": body})
    return json.dumps(
        {"n_qubits": family.n_qubits, "x_dim": family.x_dim, "terms": terms},
        indent=2,
    )


def family_from_json(text: str) -> HamiltonianFamily:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid Hamiltonian JSON: {exc}") from None
    for key in ("n_qubits", "x_dim", "terms"):
        if not isinstance(data, dict) or key not in data:
            raise ValueError(f"Hamiltonian JSON is missing {key!r}")
    n = data["n_qubits"]
    x_dim = data["x_dim"]
    terms = []
    for k, entry in enumerate(data["terms"]):
        try:
            label = entry["pauli"]
            if not isinstance(label, str) or len(label) != n:
                raise ValueError(
                    f"term {k}: pauli {label!r} does not have length {n}"
                )
            body = entry["coeff"]
            if "poly" in body:
                coeff: CoefficientFunction = Polynomial(
                    x_dim,
                    tuple(
                        (tuple(int(p) for p in m["powers"]), float(m["c"]))
                        for m in body["poly"]
                    ),
                )
            elif "tab" in body:
                tab = body["tab"]
                coeff = Tabulated(
                    float(tab["x0"]),
                    float(tab["dx"]),
                    tuple(float(v) for v in tab["values"]),
                )
            else:
                raise ValueError(f"term {k}: coeff must contain 'poly' or 'tab'")
            terms.append((PauliString.from_label(label), coeff))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"term {k}: malformed entry ({exc})") from None
    return HamiltonianFamily(n, x_dim, tuple(terms))


def load_family(path) -> HamiltonianFamily:
    with open(path, "r", encoding="utf-8") as fh:
        return family_from_json(fh.read())


def save_family(family: HamiltonianFamily, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(family_to_json(family) + "\n")
