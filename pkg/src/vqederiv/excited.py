"""Excited states by overlap-penalized deflation.

Level r minimizes <H_0> + sum_{s<r} beta_s |<psi_s|psi>|^2 over the states of
the levels below it.  With beta above twice the spectral spread the penalty
pushes each level into the orthogonal complement of the ones already found,
so the stack climbs the spectrum one eigenstate at a time.

Derivatives of an excited energy mostly reuse the ground-state pipeline.
The penalty operator depends on x through the lower-level optima, but every
term produced by that dependence in the energy gradient carries a factor of
an inter-level overlap, so at orthogonality the whole contribution drops out
and the bare Hamiltonian derivatives suffice.  That shortcut is the default.
A slower validation path keeps the projector terms explicitly; running both
and differencing them measures how well the cancellation holds on a given
stack.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass
from typing import Sequence

from .circuits import Circuit, prepare_state, wavefunction_derivative
from .energy_derivatives import (
    DerivativeBundle,
    _check_stationarity,
    _hamiltonian_block,
    energy_derivatives,
)
from .hamiltonians import HamiltonianFamily
from .kernel import PauliSum, Statevector
from .optimize import OptimizerConfig, optimize
from .response import m1_matrix, solve_hessian_system
from .theta_derivatives import Backend, DerivativeEngine, compute_theta_tensors

_DEFAULT_OVERLAP_TOL = 1e-6
_ASCENDING_TOL = 1e-8


def overlap(a: Statevector, b: Statevector) -> float:
    """|<a|b>|^2, computed exactly from amplitudes."""
    if a.amps.shape != b.amps.shape:
        raise ValueError(
            f"statevector dimensions differ ({a.amps.size} vs {b.amps.size})"
        )
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def default_beta(h: PauliSum) -> float:
    """Penalty weight 2 * sum_P |h_P|, twice a bound on the spectral spread."""
    return 2.0 * h.one_norm()


@dataclass
class DeflatedOperator:
    """base + sum_s beta_s |psi_s><psi_s|, as a linear action on amplitudes.

    Hermitian by construction, so it plugs into the optimizer and the exact
    gradient machinery wherever a plain Pauli sum would.
    """

    base: PauliSum
    projectors: tuple[tuple[Statevector, float], ...]

    def __post_init__(self) -> None:
        self.projectors = tuple((state, float(beta)) for state, beta in self.projectors)
        for state, beta in self.projectors:
            if state.n_qubits != self.base.n_qubits:
                raise ValueError(
                    f"projector on {state.n_qubits} qubits does not match the "
                    f"{self.base.n_qubits}-qubit base operator"
                )
            if beta < 0.0:
                raise ValueError("penalty weights must be >= 0")

    @property
    def n_qubits(self) -> int:
        return self.base.n_qubits

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        out = self.base.apply_amps(amps)
        for state, beta in self.projectors:
            out = out + (beta * np.vdot(state.amps, amps)) * state.amps
        return out

    def expect_amps(self, amps: np.ndarray) -> float:
        val = self.base.expect_amps(amps)
        for state, beta in self.projectors:
            val += beta * float(abs(np.vdot(state.amps, amps)) ** 2)
        return val


@dataclass(frozen=True)
class VqdLevel:
    """One optimized level: its ansatz, parameters, penalty weight, energy.

    beta is the weight with which THIS level's state is projected out of
    every later level's objective.
    """

    circuit: Circuit
    theta: np.ndarray
    beta: float
    energy: float


@dataclass
class VqdStack:
    """Deflation levels in ascending energy order, plus the family they solve."""

    family: HamiltonianFamily
    x: np.ndarray
    levels: tuple[VqdLevel, ...]

    def __len__(self) -> int:
        return len(self.levels)

    def state(self, level: int) -> Statevector:
        lv = self.levels[level]
        return prepare_state(lv.circuit, lv.theta)

    def overlap_matrix(self) -> np.ndarray:
        states = [self.state(r) for r in range(len(self.levels))]
        n = len(states)
        out = np.empty((n, n))
        for r in range(n):
            for s in range(n):
                out[r, s] = overlap(states[r], states[s])
        return out

    def deflated_operator(self, level: int) -> DeflatedOperator:
        """The objective operator that level minimized."""
        base = self.family.eval(self.x)
        projectors = tuple((self.state(s), self.levels[s].beta) for s in range(level))
        return DeflatedOperator(base, projectors)


def _check_orthogonality(stack: VqdStack, tol: float) -> float:
    """Largest off-diagonal overlap; raises naming the worst pair if over tol."""
    worst = 0.0
    worst_pair = (0, 0)
    n = len(stack.levels)
    states = [stack.state(r) for r in range(n)]
    for r in range(n):
        for s in range(r + 1, n):
            ov = overlap(states[r], states[s])
            if ov > worst:
                worst, worst_pair = ov, (r, s)
    if worst > tol:
        raise RuntimeError(
            f"levels {worst_pair[0]} and {worst_pair[1]} have overlap "
            f"{worst:.3e}, above the orthogonality tolerance {tol:.1e}"
        )
    return worst


def vqd_optimize(
    family: HamiltonianFamily,
    x: Sequence[float],
    n_levels: int,
    circuits: Circuit | Sequence[Circuit],
    betas: float | Sequence[float] | None = None,
    theta0: Sequence[Sequence[float]] | None = None,
    config: OptimizerConfig | None = None,
    overlap_tol: float = _DEFAULT_OVERLAP_TOL,
) -> VqdStack:
    """Optimize levels 0..n_levels-1 sequentially, deflating as it goes.

    Each level minimizes the base expectation plus overlap penalties against
    all previously found states.  A level that lands on an already-found
    state (overlap above overlap_tol, the signature of too small a beta) or
    below the previous energy is rejected with an error rather than recorded.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (family.x_dim,):
        raise ValueError(f"x has shape {x.shape}, family has x_dim {family.x_dim}")
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    if isinstance(circuits, Circuit):
        per_level = [circuits] * n_levels
    else:
        per_level = list(circuits)
        if len(per_level) != n_levels:
            raise ValueError(
                f"{len(per_level)} circuits provided for {n_levels} levels"
            )
    base = family.eval(x)
    if betas is None:
        beta_list = [default_beta(base)] * n_levels
    elif np.isscalar(betas):
        beta_list = [float(betas)] * n_levels
    else:
        beta_list = [float(b) for b in betas]
        if len(beta_list) != n_levels:
            raise ValueError(f"{len(beta_list)} betas provided for {n_levels} levels")
    for b in beta_list:
        if b < 0.0:
            raise ValueError("penalty weights must be >= 0")
    if theta0 is not None and len(theta0) != n_levels:
        raise ValueError(f"{len(theta0)} starting vectors for {n_levels} levels")
    config = config or OptimizerConfig()

    levels: list[VqdLevel] = []
    states: list[Statevector] = []
    for r in range(n_levels):
        circuit = per_level[r]
        start = (
            np.zeros(circuit.n_params)
            if theta0 is None
            else np.asarray(theta0[r], dtype=float)
        )
        objective = (
            base
            if r == 0
            else DeflatedOperator(
                base, tuple((states[s], levels[s].beta) for s in range(r))
            )
        )
        result = optimize(circuit, start, objective, config)
        if not result.converged:
            raise RuntimeError(
                f"level {r} optimization did not converge "
                f"(gradient norm {result.grad_norm:.3e})"
            )
        state = prepare_state(circuit, result.theta)
        for s in range(r):
            ov = overlap(state, states[s])
            if ov > overlap_tol:
                raise RuntimeError(
                    f"level {r} collapsed onto level {s} (overlap {ov:.3e}); "
                    "the penalty weight is too small to deflate it"
                )
        if r > 0 and result.energy < levels[-1].energy - _ASCENDING_TOL:
            raise RuntimeError(
                f"level {r} energy {result.energy:.12g} fell below level "
                f"{r - 1} energy {levels[-1].energy:.12g}; deflation failed"
            )
        levels.append(VqdLevel(circuit, result.theta, beta_list[r], result.energy))
        states.append(state)
    return VqdStack(family, x, tuple(levels))


def _theta_derivative_states(circuit: Circuit, theta: np.ndarray) -> np.ndarray:
    """Columns a = amplitudes of d|psi>/d theta_a."""
    cols = [
        wavefunction_derivative(circuit, theta, (a,)) for a in range(circuit.n_params)
    ]
    if not cols:
        return np.zeros((2**circuit.n_qubits, 0), dtype=complex)
    return np.stack(cols, axis=1)


def _level_response(stack: VqdStack, level: int, cache: dict) -> np.ndarray:
    """d theta^(level)/dx for the deflated objective that level minimized.

    Lower levels enter through their own responses, so this recurses down the
    stack (depth = level, each solved once thanks to the cache).
    """
    if level in cache:
        return cache[level]
    lv = stack.levels[level]
    tensors = compute_theta_tensors(lv.circuit, lv.theta, stack.family, stack.x, 2)
    hess = tensors.hessian
    m1 = m1_matrix(tensors)
    if level > 0:
        dh, dm1, _ = _projector_blocks(stack, level, cache)
        hess = hess + dh
        m1 = m1 + dm1
    r1 = solve_hessian_system(hess, -m1)
    cache[level] = r1
    return r1


def _projector_blocks(
    stack: VqdStack, level: int, cache: dict
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Penalty-term corrections to the theta Hessian, the mixed theta/x
    matrix, and the pure-x second-derivative block at the given level.

    With O_s = <psi_s|psi_r> and |d_i psi_s> the response-chained x-derivative
    of a lower state, the surviving corrections at O_s -> 0 are

        dH[a, b]  = sum_s 2 beta_s Re[<d_a psi_r|psi_s><psi_s|d_b psi_r>]
        dM1[a, i] = sum_s 2 beta_s Re[<d_a psi_r|psi_s><d_i psi_s|psi_r>]
        dB[i, j]  = sum_s 2 beta_s Re[<d_i psi_s|psi_r><psi_r|d_j psi_s>]

    Terms proportional to O_s itself are dropped; they need second-order
    derivative states, and the orthogonality check has already bounded them
    far below anything resolvable here.
    """
    lv = stack.levels[level]
    psi_r = prepare_state(lv.circuit, lv.theta).amps
    dpsi_r = _theta_derivative_states(lv.circuit, lv.theta)
    n_params = dpsi_r.shape[1]
    x_dim = stack.family.x_dim
    dh = np.zeros((n_params, n_params))
    dm1 = np.zeros((n_params, x_dim))
    db = np.zeros((x_dim, x_dim))
    for s in range(level):
        beta = stack.levels[s].beta
        if beta == 0.0:
            continue
        lvs = stack.levels[s]
        psi_s = prepare_state(lvs.circuit, lvs.theta).amps
        dpsi_s = _theta_derivative_states(lvs.circuit, lvs.theta)
        dx_s = dpsi_s @ _level_response(stack, s, cache)  # columns i = |d_i psi_s>
        c = dpsi_r.conj().T @ psi_s  # c[a] = <d_a psi_r|psi_s>
        d = dx_s.conj().T @ psi_r  # d[i] = <d_i psi_s|psi_r>
        dh += 2.0 * beta * np.real(np.outer(c, c.conj()))
        dm1 += 2.0 * beta * np.real(np.outer(c, d))
        db += 2.0 * beta * np.real(np.outer(d, d.conj()))
    return dh, dm1, db


def inner_product_terms(stack: VqdStack, level: int) -> np.ndarray:
    """Gradient contribution of the penalty's x-dependence at one level.

    Component i is sum_s 2 beta_s Re[<psi_r|d_i psi_s><psi_s|psi_r>].  Every
    term carries the inter-level overlap <psi_s|psi_r>, so on a well-deflated
    stack the whole vector is numerically zero; returning it makes that
    cancellation a measurable quantity instead of an assumption.
    """
    if not 0 <= level < len(stack.levels):
        raise ValueError(f"level {level} out of range for a {len(stack.levels)}-level stack")
    lv = stack.levels[level]
    psi_r = prepare_state(lv.circuit, lv.theta).amps
    out = np.zeros(stack.family.x_dim)
    cache: dict = {}
    for s in range(level):
        beta = stack.levels[s].beta
        lvs = stack.levels[s]
        psi_s = prepare_state(lvs.circuit, lvs.theta).amps
        dx_s = _theta_derivative_states(lvs.circuit, lvs.theta) @ _level_response(
            stack, s, cache
        )
        o_sr = np.vdot(psi_s, psi_r)
        out += 2.0 * beta * np.real((psi_r.conj() @ dx_s) * o_sr)
    return out


def excited_derivatives(
    stack: VqdStack,
    level: int,
    x: Sequence[float] | None = None,
    order: int = 1,
    drop_inner_products: bool = True,
    backend: Backend | None = None,
    orthogonality_tol: float = _DEFAULT_OVERLAP_TOL,
    stationarity_tol: float = 1e-6,
    on_nonstationary: str = "error",
) -> DerivativeBundle:
    """Energy derivatives of one deflation level.

    With drop_inner_products=True (the production path) this runs the plain
    ground-state pipeline on the bare Hamiltonian at the level's optimum,
    which is exact once the stack is orthogonal.  Note the bare theta Hessian
    at an excited level is generically indefinite (the level is a saddle of
    the bare energy), so second and third orders route through the solver's
    least-squares branch and emit its warning; the solution is still exact at
    full rank.

    With drop_inner_products=False the penalty projectors are differentiated
    explicitly through the lower levels' responses and the deflated response
    system is solved instead.  That path exists to quantify the cancellation
    the production path relies on; it needs exact statevectors and stops at
    order 2.
    """
    if not 0 <= level < len(stack.levels):
        raise ValueError(
            f"level {level} out of range for a {len(stack.levels)}-level stack"
        )
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2, or 3, got {order}")
    if on_nonstationary not in ("error", "warn"):
        raise ValueError(f"on_nonstationary must be 'error' or 'warn', got {on_nonstationary!r}")
    if x is not None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != stack.x.shape or not np.allclose(x, stack.x, atol=1e-12):
            raise ValueError(
                "the stack was optimized at a different x; re-run vqd_optimize"
            )
    max_overlap = _check_orthogonality(stack, orthogonality_tol)
    lv = stack.levels[level]
    betas = [l.beta for l in stack.levels]

    if drop_inner_products:
        bundle = energy_derivatives(
            lv.circuit,
            lv.theta,
            stack.family,
            stack.x,
            order=order,
            backend=backend,
            stationarity_tol=stationarity_tol,
            on_nonstationary=on_nonstationary,
        )
        bundle.provenance.update(
            level=level,
            drop_inner_products=True,
            betas=betas,
            max_overlap=max_overlap,
        )
        return bundle

    if backend is not None and backend.kind != "exact":
        raise ValueError("the projector-correction path is exact-simulation only")
    if order == 3:
        raise NotImplementedError(
            "projector corrections are implemented through order 2; "
            "use drop_inner_products=True for third derivatives"
        )

    engine = DerivativeEngine(lv.circuit, lv.theta)
    h0 = stack.family.eval(stack.x)
    grad_inf = _check_stationarity(engine, h0, stationarity_tol, on_nonstationary)
    energy = engine.plain_expectation(h0)
    grad = _hamiltonian_block(engine, stack.family, stack.x, 1)
    grad = grad + inner_product_terms(stack, level)
    bundle = DerivativeBundle(
        x=stack.x.copy(),
        theta=lv.theta.copy(),
        energy=energy,
        grad_x=grad,
        provenance={
            "backend": "exact",
            "order": order,
            "level": level,
            "drop_inner_products": False,
            "betas": betas,
            "max_overlap": max_overlap,
            "stationarity_tol": stationarity_tol,
            "grad_theta_inf_norm": grad_inf,
        },
    )
    if order == 1:
        return bundle

    cache: dict = {}
    tensors = compute_theta_tensors(
        lv.circuit, lv.theta, stack.family, stack.x, 2, engine=engine
    )
    hess_theta = tensors.hessian
    m1 = m1_matrix(tensors)
    db = np.zeros((stack.family.x_dim,) * 2)
    if level > 0:
        dh, dm1, db = _projector_blocks(stack, level, cache)
        hess_theta = hess_theta + dh
        m1 = m1 + dm1
    r1 = solve_hessian_system(hess_theta, -m1)
    raw = r1.T @ m1 + _hamiltonian_block(engine, stack.family, stack.x, 2) + db
    bundle.hessian_x = 0.5 * (raw + raw.T)
    bundle.r1 = r1
    bundle.provenance["hessian_x_asymmetry"] = float(np.max(np.abs(raw - raw.T)))
    return bundle
