"""Total x-derivatives of the optimized energy E*(x) = E(theta*(x), x).

Stationarity removes every dE/dtheta term, so the gradient is the bare
expectation of dH/dx and the higher orders couple the parameter responses to
the mixed theta/x tensors:

    grad[i]    = <dH/dx_i>
    hess[i, j] = sum_a R1[a, i] M1[a, j] + <d2H/dx_i dx_j>
    third      = T3.R1.R1.R1 + three M2 pairings + three M11 pairings + <d3H>

The third order uses first responses only; the variant that spends the
second response instead is kept behind a flag purely as a consistency check,
since the two assemblies must agree at a stationary point.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .circuits import Circuit
from .hamiltonians import HamiltonianFamily
from .optimize import OptimizerConfig, optimize
from .response import first_response, m1_matrix, second_response
from .theta_derivatives import (
    Backend,
    DerivativeEngine,
    ThetaTensors,
    _unit_indices,
    compute_theta_tensors,
)

_DEFAULT_STATIONARITY_TOL = 1e-6
_BRANCH_JUMP_NORM = 0.5


class StationarityError(RuntimeError):
    """theta is not a stationary point to the requested tolerance."""


class BranchJumpError(RuntimeError):
    """A re-optimization left the local branch of theta*(x)."""


class StationarityWarning(UserWarning):
    pass


@dataclass
class DerivativeBundle:
    """Energy derivatives at one x, with the responses that produced them."""

    x: np.ndarray
    theta: np.ndarray
    energy: float
    grad_x: np.ndarray
    hessian_x: np.ndarray | None = None
    third_x: np.ndarray | None = None
    r1: np.ndarray | None = None
    r2: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "x": arr(self.x),
            "theta": arr(self.theta),
            "energy": self.energy,
            "grad_x": arr(self.grad_x),
            "hessian_x": arr(self.hessian_x),
            "third_x": arr(self.third_x),
            "r1": arr(self.r1),
            "r2": arr(self.r2),
            "provenance": self.provenance,
        }


class FdReport(NamedTuple):
    analytical: np.ndarray | float
    numerical: np.ndarray | float
    abs_diff: np.ndarray | float


def _check_stationarity(
    engine: DerivativeEngine,
    h,
    tol: float,
    on_violation: str,
) -> float:
    grad = engine.gradient(h)
    inf_norm = float(np.max(np.abs(grad))) if grad.size else 0.0
    if inf_norm > tol:
        message = (
            f"|dE/dtheta|_inf = {inf_norm:.3e} exceeds the stationarity "
            f"tolerance {tol:.1e}; the response equations assume a stationary "
            "point"
        )
        if on_violation == "warn":
            warnings.warn(message, StationarityWarning, stacklevel=3)
        else:
            raise StationarityError(message)
    return inf_norm


def _hamiltonian_block(
    engine: DerivativeEngine,
    family: HamiltonianFamily,
    x: np.ndarray,
    order: int,
) -> np.ndarray:
    """<d^q H> for all |q| = order, mirrored into a symmetric array."""
    x_dim = family.x_dim
    out = np.empty((x_dim,) * order)
    for combo in itertools.combinations_with_replacement(range(x_dim), order):
        q = [0] * x_dim
        for i in combo:
            q[i] += 1
        val = engine.plain_expectation(family.derivative(tuple(q)).eval(x))
        for perm in set(itertools.permutations(combo)):
            out[perm] = val
    return out


def _third_simplified(
    tensors: ThetaTensors, r1: np.ndarray, h3: np.ndarray
) -> np.ndarray:
    x_dim = r1.shape[1]
    units = _unit_indices(x_dim)
    m2 = np.stack([tensors.mixed_hess[q] for q in units], axis=2)
    m11 = np.empty((r1.shape[0], x_dim, x_dim))
    for i, qi in enumerate(units):
        for j, qj in enumerate(units):
            pair = tuple(a + b for a, b in zip(qi, qj))
            m11[:, i, j] = tensors.mixed_grad[pair]
    cubic = np.einsum("abc,ai,bj,ck->ijk", tensors.third, r1, r1, r1)
    pair_m2 = np.einsum("abk,ai,bj->ijk", m2, r1, r1)
    pair_m2 = pair_m2 + np.transpose(pair_m2, (1, 2, 0)) + np.transpose(
        pair_m2, (2, 0, 1)
    )
    pair_m11 = np.einsum("ajk,ai->ijk", m11, r1)
    pair_m11 = pair_m11 + np.transpose(pair_m11, (1, 2, 0)) + np.transpose(
        pair_m11, (2, 0, 1)
    )
    return cubic + pair_m2 + pair_m11 + h3


def _third_unsimplified(
    tensors: ThetaTensors,
    r1: np.ndarray,
    r2: np.ndarray,
    h3: np.ndarray,
) -> np.ndarray:
    x_dim = r1.shape[1]
    units = _unit_indices(x_dim)
    m1 = m1_matrix(tensors)
    m2 = np.stack([tensors.mixed_hess[q] for q in units], axis=2)
    m11 = np.empty((r1.shape[0], x_dim, x_dim))
    for i, qi in enumerate(units):
        for j, qj in enumerate(units):
            pair = tuple(a + b for a, b in zip(qi, qj))
            m11[:, i, j] = tensors.mixed_grad[pair]
    out = np.einsum("aij,ak->ijk", r2, m1)
    out += np.einsum("aj,bi,abk->ijk", r1, r1, m2)
    out += np.einsum("aj,aik->ijk", r1, m11)
    out += np.einsum("ai,ajk->ijk", r1, m11)
    return out + h3


def energy_derivatives(
    circuit: Circuit,
    theta: Sequence[float],
    family: HamiltonianFamily,
    x: Sequence[float],
    order: int = 2,
    backend: Backend | None = None,
    unsimplified_third: bool = False,
    stationarity_tol: float = _DEFAULT_STATIONARITY_TOL,
    on_nonstationary: str = "error",
) -> DerivativeBundle:
    """Assemble E*, dE*/dx, and optionally the second and third tensors.

    theta must already sit at a local minimum of E(., x); the guard on
    |dE/dtheta|_inf raises (or warns, per on_nonstationary) otherwise.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2, or 3, got {order}")
    if on_nonstationary not in ("error", "warn"):
        raise ValueError("on_nonstationary must be 'error' or 'warn'")
    x = np.asarray(x, dtype=float)
    if x.shape != (family.x_dim,):
        raise ValueError(
            f"x has shape {x.shape}, family has x_dim {family.x_dim}"
        )
    engine = DerivativeEngine(circuit, theta, backend)
    h = family.eval(x)
    grad_norm = _check_stationarity(
        engine, h, stationarity_tol, on_nonstationary
    )

    bundle = DerivativeBundle(
        x=x,
        theta=np.array(engine.theta),
        energy=engine.plain_expectation(h),
        grad_x=_hamiltonian_block(engine, family, x, 1),
        provenance={
            "backend": engine.backend.kind,
            "shots": engine.backend.shots,
            "seed": engine.backend.seed,
            "order": order,
            "stationarity_tol": stationarity_tol,
            "grad_theta_inf_norm": grad_norm,
            "third_assembly": (
                None
                if order < 3
                else ("unsimplified" if unsimplified_third else "simplified")
            ),
        },
    )
    if order == 1:
        return bundle

    tensors = compute_theta_tensors(
        circuit, engine.theta, family, x, order=order, engine=engine
    )
    r1 = first_response(tensors)
    bundle.r1 = r1
    m1 = m1_matrix(tensors)
    raw = r1.T @ m1 + _hamiltonian_block(engine, family, x, 2)
    asymmetry = float(np.max(np.abs(raw - raw.T))) if raw.size else 0.0
    bundle.hessian_x = 0.5 * (raw + raw.T)
    bundle.provenance["hessian_x_asymmetry"] = asymmetry
    if order == 2:
        return bundle

    h3 = _hamiltonian_block(engine, family, x, 3)
    if unsimplified_third:
        r2 = second_response(tensors, r1)
        bundle.r2 = r2
        bundle.third_x = _third_unsimplified(tensors, r1, r2, h3)
    else:
        bundle.third_x = _third_simplified(tensors, r1, h3)
    return bundle


# finite-difference validation


def _reoptimize(
    circuit: Circuit,
    family: HamiltonianFamily,
    x: np.ndarray,
    theta_start: np.ndarray,
    config: OptimizerConfig,
) -> tuple[float, np.ndarray]:
    result = optimize(circuit, theta_start, family.eval(x), config)
    if not result.converged:
        raise BranchJumpError(
            f"re-optimization at x = {x} did not converge"
        )
    delta = float(np.linalg.norm(result.theta - theta_start))
    if delta > _BRANCH_JUMP_NORM:
        raise BranchJumpError(
            f"re-optimization at x = {x} moved theta by {delta:.3f} "
            f"(> {_BRANCH_JUMP_NORM}); the stencil left the local branch"
        )
    return result.energy, result.theta


def fd_validate(
    family: HamiltonianFamily,
    circuit: Circuit,
    x: Sequence[float],
    order: int,
    h: float,
    theta: Sequence[float] | None = None,
    config: OptimizerConfig | None = None,
) -> FdReport:
    """Analytical derivative vs a central difference of re-optimized E*.

    Each stencil evaluation re-optimizes theta, warm-started from the center
    solution so the stencil stays on one local branch.  Orders 2 and 3
    require a one-component x; order 1 differences each component.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2, or 3, got {order}")
    if h <= 0.0:
        raise ValueError(f"fd step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    config = config or OptimizerConfig(tol=1e-12)
    if theta is None:
        theta = np.zeros(circuit.n_params)
    center = optimize(circuit, np.asarray(theta, dtype=float), family.eval(x), config)
    if not center.converged:
        raise BranchJumpError(f"optimization at the center x = {x} did not converge")
    theta_c = center.theta

    bundle = energy_derivatives(circuit, theta_c, family, x, order=order)

    # Stencil points must not multi-start: a perturbed restart could settle
    # in a different basin and silently switch branches.
    stencil_config = replace(config, seeds=1)

    def estar(point: np.ndarray) -> float:
        return _reoptimize(circuit, family, point, theta_c, stencil_config)[0]

    if order == 1:
        numerical = np.empty(family.x_dim)
        for i in range(family.x_dim):
            dx = np.zeros(family.x_dim)
            dx[i] = h
            numerical[i] = (estar(x + dx) - estar(x - dx)) / (2.0 * h)
        analytical = bundle.grad_x
        return FdReport(analytical, numerical, np.abs(analytical - numerical))

    if family.x_dim != 1:
        raise ValueError(
            "orders 2 and 3 validate one-component families only"
        )
    if order == 2:
        numerical = (estar(x + h) - 2.0 * center.energy + estar(x - h)) / (h * h)
        analytical = float(bundle.hessian_x[0, 0])
    else:
        numerical = (
            estar(x + 2 * h)
            - 2.0 * estar(x + h)
            + 2.0 * estar(x - h)
            - estar(x - 2 * h)
        ) / (2.0 * h**3)
        analytical = float(bundle.third_x[0, 0, 0])
    return FdReport(analytical, float(numerical), abs(analytical - numerical))


# Taylor expansion of the PES and measurement-cost model


def taylor_pes(
    bundle: DerivativeBundle,
    x_range: tuple[float, float],
    samples: int,
) -> np.ndarray:
    """Rows (x, harmonic, cubic) of the Taylor expansion around bundle.x.

    harmonic truncates at the second derivative; cubic adds the third when
    the bundle carries one and otherwise repeats the harmonic column.
    """
    if bundle.x.shape != (1,):
        raise ValueError("tabulated expansion needs a one-component x")
    if bundle.hessian_x is None:
        raise ValueError("taylor_pes needs at least a second-order bundle")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    lo, hi = float(x_range[0]), float(x_range[1])
    xs = np.linspace(lo, hi, samples)
    delta = xs - bundle.x[0]
    g = float(bundle.grad_x[0])
    h2 = float(bundle.hessian_x[0, 0])
    harmonic = bundle.energy + g * delta + 0.5 * h2 * delta**2
    t3 = 0.0 if bundle.third_x is None else float(bundle.third_x[0, 0, 0])
    cubic = harmonic + t3 * delta**3 / 6.0
    return np.column_stack([xs, harmonic, cubic])


_PER_ENTRY_RUNS = {
    ("ancilla", 2): 2,
    ("ancilla", 3): 4,
    ("lowdepth", 2): 4,
    ("lowdepth", 3): 8,
}


def cost_estimate(
    n_qubits: int,
    n_params: int,
    order: int,
    epsilon: float,
    backend: str = "ancilla",
    fd_step: float = 1e-3,
    x_dim: int = 1,
) -> dict:
    """Leading-order circuit-run counts for the derivative tensors.

    The Hamiltonian term count is taken as n_qubits^4, the second-quantized
    scaling.  Order 1 is the bare dH/dx expectation (no insertion circuits);
    orders 2 and 3 multiply the per-entry run multiplicity by N_H N_theta^d
    and the 1/epsilon^2 shot budget.  The finite-difference alternative costs
    N_H x_dim^d / (epsilon^2 fd_step^{2d}) runs for comparison.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2, or 3, got {order}")
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if order > 1 and backend not in ("ancilla", "lowdepth"):
        raise ValueError(
            f"backend must be 'ancilla' or 'lowdepth', got {backend!r}"
        )
    n_h = float(n_qubits**4)
    if order == 1:
        per_entry = 1
        method_runs = n_h / epsilon**2
    else:
        per_entry = _PER_ENTRY_RUNS[(backend, order)]
        method_runs = per_entry * n_h * float(n_params) ** order / epsilon**2
    fd_runs = n_h * float(x_dim) ** order / (epsilon**2 * fd_step ** (2 * order))
    return {
        "method_runs": method_runs,
        "fd_runs": fd_runs,
        "per_entry_runs": per_entry,
        "n_hamiltonian_terms": n_h,
        "backend": backend if order > 1 else "any",
        "order": order,
        "epsilon": epsilon,
    }
