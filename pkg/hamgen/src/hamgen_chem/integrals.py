"""Closed-form molecular integrals over contracted s-type Gaussians.

For s functions every integral reduces to the Gaussian product theorem
plus the zeroth Boys function, so no recurrence machinery is needed.
All geometry is in Bohr and all energies in Hartree.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .basis import Shell


def boys0(t):
    """F_0(t) = (1/2) sqrt(pi/t) erf(sqrt(t)), continued to F_0(0) = 1."""
    t = np.asarray(t, dtype=float)
    small = t < 1e-12
    safe = np.where(small, 1.0, t)
    value = 0.5 * np.sqrt(np.pi / safe) * special.erf(np.sqrt(safe))
    result = np.where(small, 1.0 - t / 3.0, value)
    return float(result) if result.ndim == 0 else result


def _pair(a: Shell, b: Shell):
    """Primitive-pair data, flattened over the contraction product."""
    alpha = a.exponents[:, None]
    beta = b.exponents[None, :]
    p = (alpha + beta).ravel()
    mu = (alpha * beta).ravel() / p
    r2 = float(np.dot(a.center - b.center, a.center - b.center))
    centers = (
        alpha[..., None] * a.center + beta[..., None] * b.center
    ).reshape(-1, 3) / p[:, None]
    weights = (a.coefficients[:, None] * b.coefficients[None, :]).ravel()
    screen = np.exp(-mu * r2)
    return weights, p, mu, centers, screen


def overlap(a: Shell, b: Shell) -> float:
    weights, p, _, _, screen = _pair(a, b)
    return float(np.sum(weights * (np.pi / p) ** 1.5 * screen))


def kinetic(a: Shell, b: Shell) -> float:
    weights, p, mu, _, screen = _pair(a, b)
    r2 = float(np.dot(a.center - b.center, a.center - b.center))
    kernel = mu * (3.0 - 2.0 * mu * r2) * (np.pi / p) ** 1.5
    return float(np.sum(weights * kernel * screen))


def nuclear_attraction(a: Shell, b: Shell, center, charge: float) -> float:
    """Attraction to a point charge at ``center`` (negative by convention)."""
    weights, p, _, product_centers, screen = _pair(a, b)
    c = np.asarray(center, dtype=float)
    t = p * np.sum((product_centers - c) ** 2, axis=1)
    kernel = (2.0 * np.pi / p) * boys0(t)
    return float(-charge * np.sum(weights * kernel * screen))


def repulsion(a: Shell, b: Shell, c: Shell, d: Shell) -> float:
    """Two-electron integral (ab|cd) in chemist notation."""
    w1, p1, _, P1, s1 = _pair(a, b)
    w2, p2, _, P2, s2 = _pair(c, d)
    pq = p1[:, None] + p2[None, :]
    rho = p1[:, None] * p2[None, :] / pq
    t = rho * np.sum((P1[:, None, :] - P2[None, :, :]) ** 2, axis=2)
    kernel = (
        2.0 * np.pi**2.5 / (p1[:, None] * p2[None, :] * np.sqrt(pq))
    ) * boys0(t)
    return float(w1 @ (kernel * s1[:, None] * s2[None, :]) @ w2)
