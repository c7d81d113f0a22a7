"""VQE energy minimization over circuit parameters.

The energy landscape E(theta) = <psi(theta)|H|psi(theta)> is minimized with a
BFGS quasi-Newton loop (backtracking Armijo line search) and, once the
gradient is small, polished with exact-Hessian Newton steps so stationarity
can be certified far below line-search resolution.  Everything is
deterministic given theta0 and the config seed; multi-start perturbations
draw from seeds derived per start index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from ._seeding import derive_seed
from .circuits import Circuit, prepare_state, wavefunction_derivative


class Observable(Protocol):
    """A Hermitian operator given by its raw linear action on amplitudes."""

    n_qubits: int

    def apply_amps(self, amps: np.ndarray) -> np.ndarray: ...

    def expect_amps(self, amps: np.ndarray) -> float: ...


@dataclass
class OptimizerConfig:
    max_iters: int = 300
    tol: float = 1e-10  # convergence threshold on the gradient inf-norm
    seeds: int = 4  # multi-start count, first start is theta0 itself
    seed: int = 0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 45
    perturb_scale: float = 0.5
    newton_polish: bool = True

    def __post_init__(self) -> None:
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if not (0 < self.backtrack < 1):
            raise ValueError("backtrack factor must be in (0, 1)")


@dataclass
class OptimizationResult:
    theta: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    energy_trace: tuple[float, ...] = field(default=(), repr=False)


class StationarityReport(NamedTuple):
    stationary: bool
    grad_norm: float


def energy(circuit: Circuit, theta: Sequence[float], h: Observable) -> float:
    """<psi(theta)|H|psi(theta)>."""
    if h.n_qubits != circuit.n_qubits:
        raise ValueError("observable and circuit qubit counts differ")
    return h.expect_amps(prepare_state(circuit, theta).amps)


def gradient_theta(
    circuit: Circuit, theta: Sequence[float], h: Observable
) -> np.ndarray:
    """Analytic dE/dtheta via a reverse sweep.

    Component a equals 2 Re <dpsi/dtheta_a | H | psi>, evaluated by undoing
    the circuit gate by gate against lambda = H psi, so the whole gradient
    costs a constant number of sweeps instead of one simulation per
    parameter.
    """
    from .circuits import (
        Parametric,
        _apply_element_inverse_raw,
        _apply_generator_raw,
    )

    theta = np.asarray(theta, dtype=float)
    psi = prepare_state(circuit, theta).amps
    lam = h.apply_amps(psi)
    grad = np.zeros(circuit.n_params)
    for el in reversed(circuit.elements):
        if isinstance(el, Parametric):
            gpsi = _apply_generator_raw(psi, el.generator)
            grad[el.param_index] = 2.0 * float(np.real(1j * np.vdot(lam, gpsi)))
        psi = _apply_element_inverse_raw(psi, el, theta, circuit.n_qubits)
        lam = _apply_element_inverse_raw(lam, el, theta, circuit.n_qubits)
    return grad


def _exact_hessian_local(
    circuit: Circuit, theta: np.ndarray, h: Observable
) -> np.ndarray:
    """d2E/dtheta2 from derivative states; used only for Newton polishing."""
    n = circuit.n_params
    psi = prepare_state(circuit, theta).amps
    hpsi = h.apply_amps(psi)
    d1 = [wavefunction_derivative(circuit, theta, [a]) for a in range(n)]
    hd1 = [h.apply_amps(d) for d in d1]
    hess = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            dab = wavefunction_derivative(circuit, theta, [a, b])
            val = 2.0 * float(
                np.real(np.vdot(dab, hpsi)) + np.real(np.vdot(d1[a], hd1[b]))
            )
            hess[a, b] = hess[b, a] = val
    return hess


def _inf_norm(g: np.ndarray) -> float:
    return float(np.max(np.abs(g))) if g.size else 0.0


def _bfgs(
    circuit: Circuit,
    theta0: np.ndarray,
    h: Observable,
    config: OptimizerConfig,
) -> tuple[np.ndarray, np.ndarray, int, list[float]]:
    """Minimize until tol, stall, or max_iters; returns (theta, grad, iters, trace)."""
    n = theta0.size
    theta = theta0.copy()
    e_val = energy(circuit, theta, h)
    grad = gradient_theta(circuit, theta, h)
    b_inv = np.eye(n)
    trace = [e_val]
    iters = 0
    while _inf_norm(grad) > config.tol and iters < config.max_iters:
        direction = -b_inv @ grad
        slope = float(direction @ grad)
        if slope >= 0.0:
            b_inv = np.eye(n)
            direction = -grad
            slope = -float(grad @ grad)
        alpha = 1.0
        accepted = False
        for _ in range(config.max_backtracks):
            trial = theta + alpha * direction
            e_trial = energy(circuit, trial, h)
            if e_trial <= e_val + config.armijo_c * alpha * slope:
                accepted = True
                break
            alpha *= config.backtrack
        if not accepted:
            break  # line search stalled; Newton polish may still finish
        grad_new = gradient_theta(circuit, trial, h)
        s = trial - theta
        y = grad_new - grad
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * max(np.linalg.norm(y), 1e-300):
            rho = 1.0 / sy
            outer = np.outer(s, y)
            b_inv = (
                (np.eye(n) - rho * outer) @ b_inv @ (np.eye(n) - rho * outer.T)
                + rho * np.outer(s, s)
            )
        theta, e_val, grad = trial, e_trial, grad_new
        trace.append(e_val)
        iters += 1
    return theta, grad, iters, trace


def _newton_polish(
    circuit: Circuit,
    theta: np.ndarray,
    h: Observable,
    config: OptimizerConfig,
    iters: int,
    trace: list[float],
) -> tuple[np.ndarray, np.ndarray, int]:
    grad = gradient_theta(circuit, theta, h)
    for _ in range(40):
        gnorm = _inf_norm(grad)
        if gnorm <= config.tol or iters >= config.max_iters + 40:
            break
        hess = _exact_hessian_local(circuit, theta, h)
        vals, vecs = np.linalg.eigh(hess)
        # Truncate near-null curvature directions instead of flooring them;
        # inverting a floored tiny eigenvalue would blast theta along flat
        # valleys that tiny gradient components cannot justify.
        floor = max(1e-10, 1e-9 * float(np.max(np.abs(vals))))
        mags = np.abs(vals)
        inv = np.divide(1.0, mags, out=np.zeros_like(mags), where=mags >= floor)
        step = -vecs @ (inv * (vecs.T @ grad))
        alpha = 1.0
        improved = False
        for _ in range(25):
            trial = theta + alpha * step
            grad_trial = gradient_theta(circuit, trial, h)
            if _inf_norm(grad_trial) < gnorm:
                theta, grad = trial, grad_trial
                improved = True
                break
            alpha *= 0.5
        iters += 1
        if not improved:
            break
        trace.append(energy(circuit, theta, h))
    return theta, grad, iters


def optimize(
    circuit: Circuit,
    theta0: Sequence[float],
    h: Observable,
    config: OptimizerConfig | None = None,
) -> OptimizationResult:
    """Multi-start quasi-Newton minimization of the circuit energy."""
    config = config or OptimizerConfig()
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (circuit.n_params,):
        raise ValueError(
            f"theta0 has shape {theta0.shape}, circuit has {circuit.n_params} "
            "parameters"
        )
    if circuit.n_params == 0:
        e_val = energy(circuit, theta0, h)
        return OptimizationResult(theta0, e_val, 0.0, 0, True, (e_val,))

    best: OptimizationResult | None = None
    for start in range(config.seeds):
        if start == 0:
            theta_init = theta0
        else:
            rng = np.random.default_rng(derive_seed(config.seed, "multistart", start))
            theta_init = theta0 + rng.normal(
                0.0, config.perturb_scale, size=theta0.size
            )
        theta, grad, iters, trace = _bfgs(circuit, theta_init, h, config)
        if config.newton_polish and _inf_norm(grad) > config.tol:
            theta, grad, iters = _newton_polish(circuit, theta, h, config, iters, trace)
        e_val = energy(circuit, theta, h)
        result = OptimizationResult(
            theta,
            e_val,
            _inf_norm(grad),
            iters,
            _inf_norm(grad) <= config.tol,
            tuple(trace),
        )
        if best is None:
            best = result
        elif result.converged and not best.converged:
            best = result
        elif result.converged == best.converged and result.energy < best.energy - 1e-12:
            best = result  # ties keep the earliest start, so theta0 wins when optimal
    assert best is not None
    return best


def check_stationarity(
    circuit: Circuit,
    theta: Sequence[float],
    h: Observable,
    tol: float = 1e-8,
) -> StationarityReport:
    """Certify |dE/dtheta|_inf <= tol at the given point."""
    gnorm = _inf_norm(gradient_theta(circuit, theta, h))
    return StationarityReport(gnorm <= tol, gnorm)
