"""Propagating theta*(x) along x without re-optimizing at every point.

A stationary point moves at the rate given by the first response, so

    theta(x + dx) ~ theta(x) + R1 dx

tracks the optimum with a per-step error of O(dx^2), like an explicit Euler
integrator.  Iterating the update drifts away from the true optimum branch;
the recorded gradient norm measures that drift, and an optional periodic
re-optimization snaps the trajectory back onto it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import Circuit
from .hamiltonians import HamiltonianFamily
from .optimize import OptimizerConfig, energy, gradient_theta, optimize
from .response import first_response
from .theta_derivatives import compute_theta_tensors

_DEFAULT_DRIFT_TOL = 1e-3


@dataclass(frozen=True)
class ContinuationStep:
    """One scan point: the continued parameters and their diagnostics."""

    x: np.ndarray
    theta: np.ndarray
    energy: float
    grad_norm: float
    energy_reopt: float | None = None


@dataclass
class ContinuationTrajectory:
    """Euler-continued steps in scan order, each with its gradient norm."""

    steps: tuple[ContinuationStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def column(self, name: str) -> np.ndarray:
        if name == "x":
            return np.stack([s.x for s in self.steps])
        if name == "E_euler":
            return np.array([s.energy for s in self.steps])
        if name == "E_reopt":
            return np.array(
                [np.nan if s.energy_reopt is None else s.energy_reopt for s in self.steps]
            )
        if name == "grad_norm":
            return np.array([s.grad_norm for s in self.steps])
        raise KeyError(name)


class DriftWarning(UserWarning):
    """theta has wandered off stationarity during a continuation."""


def euler_step(
    family: HamiltonianFamily,
    circuit: Circuit,
    theta: Sequence[float],
    x: Sequence[float],
    dx: Sequence[float],
    drift_tol: float = _DEFAULT_DRIFT_TOL,
) -> np.ndarray:
    """theta + R1 dx, one Hessian solve.

    Drift off the stationary manifold is reported as a warning rather than
    an error: watching the update degrade away from the anchor is exactly
    what the diagnostic columns of a scan are for.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    if x.shape != (family.x_dim,):
        raise ValueError(f"x has shape {x.shape}, family has x_dim {family.x_dim}")
    if dx.shape != x.shape:
        raise ValueError(f"dx has shape {dx.shape}, expected {x.shape}")
    theta = np.asarray(theta, dtype=float)
    grad = gradient_theta(circuit, theta, family.eval(x))
    grad_norm = float(np.max(np.abs(grad))) if grad.size else 0.0
    if grad_norm > drift_tol:
        warnings.warn(
            f"|dE/dtheta|_inf = {grad_norm:.3e} at the step start; the "
            "first-response update assumes stationarity",
            DriftWarning,
            stacklevel=2,
        )
    if not np.any(dx):
        return theta.copy()
    tensors = compute_theta_tensors(circuit, theta, family, x, 2)
    r1 = first_response(tensors)
    return theta + r1 @ dx


def continuation_scan(
    family: HamiltonianFamily,
    circuit: Circuit,
    theta_start: Sequence[float],
    x_start: float,
    x_end: float,
    dx: float,
    reoptimize_every: int | None = None,
    config: OptimizerConfig | None = None,
    drift_tol: float = _DEFAULT_DRIFT_TOL,
) -> ContinuationTrajectory:
    """March theta from x_start toward x_end in steps of dx.

    Records the continued energy and gradient norm at every visited point.
    With reoptimize_every = k, every k-th step re-optimizes from the
    continued theta (recording the re-optimized energy) and the march
    resumes from the refreshed parameters.  A failed response solve ends
    the scan early; the steps already taken come back as the trajectory.

    One-component x only, matching the scan's CSV orientation.
    """
    if family.x_dim != 1:
        raise ValueError("scans take a one-component x")
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    if reoptimize_every is not None and reoptimize_every < 1:
        raise ValueError("reoptimize_every must be >= 1")
    config = config or OptimizerConfig()
    theta = np.asarray(theta_start, dtype=float).copy()
    direction = 1.0 if x_end >= x_start else -1.0
    n_steps = int(round(abs(x_end - x_start) / dx))

    steps: list[ContinuationStep] = []
    for t in range(n_steps + 1):
        x = np.array([x_start + direction * t * dx])
        h = family.eval(x)
        grad = gradient_theta(circuit, theta, h)
        grad_norm = float(np.max(np.abs(grad))) if grad.size else 0.0
        e_euler = energy(circuit, theta, h)
        e_reopt = None
        if reoptimize_every is not None and t % reoptimize_every == 0:
            result = optimize(circuit, theta, h, config)
            if result.converged:
                e_reopt = result.energy
                theta = result.theta
                grad = gradient_theta(circuit, theta, h)
                grad_norm = float(np.max(np.abs(grad))) if grad.size else 0.0
        steps.append(ContinuationStep(x, theta.copy(), e_euler, grad_norm, e_reopt))
        if t == n_steps:
            break
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DriftWarning)
                theta = euler_step(
                    family, circuit, theta, x, [direction * dx], drift_tol
                )
        except np.linalg.LinAlgError:
            break
    return ContinuationTrajectory(tuple(steps))
