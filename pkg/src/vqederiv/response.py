"""Parameter-response solves: how the optimum theta*(x) moves with x.

Differentiating the stationarity condition dE/dtheta = 0 gives linear
systems in the theta Hessian:

    Hess @ R1[:, i]    = -M1[:, i]
    Hess @ R2[:, i, j] = -gamma[:, i, j]

with M1 the mixed theta/x gradient block and gamma assembled from the third
theta tensor plus the mixed blocks.  The Hessian of a converged minimum is
positive definite, so the default path is a Cholesky solve; anything
ill-conditioned or indefinite falls back to a least-squares pseudo-inverse
and warns.
"""

from __future__ import annotations

import warnings

import numpy as np

from .theta_derivatives import ThetaTensors, _unit_indices

# Relative eigenvalue threshold below which the Hessian solve falls back.
_DEFINITE_RTOL = 1e-10


class PseudoinverseFallbackWarning(UserWarning):
    """The theta Hessian was not safely positive definite."""


def solve_hessian_system(hessian: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve Hess @ out = rhs, falling back to lstsq when not SPD.

    The fallback triggers when the smallest signed eigenvalue drops below
    _DEFINITE_RTOL times the largest, which covers near-singular and
    indefinite Hessians alike.
    """
    hessian = np.asarray(hessian, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = hessian.shape[0]
    if hessian.shape != (n, n):
        raise ValueError(f"hessian must be square, got {hessian.shape}")
    if rhs.shape[0] != n:
        raise ValueError(
            f"rhs first dimension {rhs.shape[0]} does not match hessian size {n}"
        )
    if n == 0:
        return np.zeros_like(rhs)
    vals = np.linalg.eigvalsh(hessian)
    smallest, largest = float(vals[0]), float(vals[-1])
    if smallest < _DEFINITE_RTOL * max(largest, 0.0):
        warnings.warn(
            f"theta Hessian is not safely positive definite (eigenvalues in "
            f"[{smallest:.3e}, {largest:.3e}]); using a least-squares "
            "pseudo-inverse",
            PseudoinverseFallbackWarning,
            stacklevel=2,
        )
        flat = rhs.reshape(n, -1)
        sol, *_ = np.linalg.lstsq(hessian, flat, rcond=None)
        return sol.reshape(rhs.shape)
    chol = np.linalg.cholesky(hessian)
    flat = rhs.reshape(n, -1)
    half = np.linalg.solve(chol, flat)
    return np.linalg.solve(chol.T, half).reshape(rhs.shape)


def _x_dim(tensors: ThetaTensors) -> int:
    for q in tensors.mixed_grad:
        return len(q)
    raise ValueError("tensors carry no mixed theta/x blocks")


def m1_matrix(tensors: ThetaTensors) -> np.ndarray:
    """Stack the |q| = 1 mixed gradients into an (n_theta, x_dim) matrix."""
    x_dim = _x_dim(tensors)
    cols = [tensors.mixed_grad[q] for q in _unit_indices(x_dim)]
    return np.stack(cols, axis=1)


def first_response(tensors: ThetaTensors) -> np.ndarray:
    """R1[a, i] = d theta*_a / d x_i at the stationary point."""
    if tensors.hessian is None:
        raise ValueError("first response needs the theta Hessian")
    return solve_hessian_system(tensors.hessian, -m1_matrix(tensors))


def gamma_tensor(tensors: ThetaTensors, r1: np.ndarray) -> np.ndarray:
    """Right-hand side of the second-response system, symmetrized in (i, j).

    Per ordered pair the assembly is

        gamma[c, i, j] = sum_ab T3[c, a, b] R1[a, i] R1[b, j]
                       + 2 sum_a M2_j[c, a] R1[a, i]
                       + M11_ij[c]

    whose unsymmetric middle term is averaged over (i, j) before the solve;
    the true R2 right-hand side is the symmetric part.
    """
    if tensors.third is None:
        raise ValueError("second response needs the third theta tensor")
    x_dim = _x_dim(tensors)
    units = _unit_indices(x_dim)
    n = tensors.third.shape[0]
    raw = np.empty((n, x_dim, x_dim))
    cubic = np.einsum("cab,ai,bj->cij", tensors.third, r1, r1)
    for i, qi in enumerate(units):
        for j, qj in enumerate(units):
            pair = tuple(a + b for a, b in zip(qi, qj))
            raw[:, i, j] = (
                cubic[:, i, j]
                + 2.0 * tensors.mixed_hess[qj] @ r1[:, i]
                + tensors.mixed_grad[pair]
            )
    return 0.5 * (raw + np.transpose(raw, (0, 2, 1)))


def second_response(
    tensors: ThetaTensors, r1: np.ndarray | None = None
) -> np.ndarray:
    """R2[a, i, j] = d^2 theta*_a / d x_i d x_j at the stationary point."""
    if r1 is None:
        r1 = first_response(tensors)
    gamma = gamma_tensor(tensors, r1)
    return solve_hessian_system(tensors.hessian, -gamma)
