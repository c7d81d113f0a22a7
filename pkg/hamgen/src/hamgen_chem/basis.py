"""Contracted s-type Gaussian shells for minimal basis sets.

Only STO-3G hydrogen is tabulated.  Exponents carry the standard zeta =
1.24 scaling for hydrogen in molecules; contraction coefficients refer to
unit-normalized primitives.  The contracted function is renormalized
exactly at construction so every diagonal overlap is 1 by definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_STO3G = {
    "H": (
        np.array([3.425250914, 0.6239137298, 0.1688554040]),
        np.array([0.1543289673, 0.5353281423, 0.4446345422]),
    ),
}

_CHARGES = {"H": 1}


@dataclass(frozen=True)
class Shell:
    """A contracted s-type Gaussian fixed at ``center`` (Bohr).

    ``coefficients`` already include primitive norms and the contracted
    renormalization, so integrals sum d_i d_j times primitive kernels
    with no further normalization factors.
    """

    center: np.ndarray
    exponents: np.ndarray
    coefficients: np.ndarray


def nuclear_charge(symbol: str) -> int:
    try:
        return _CHARGES[symbol]
    except KeyError:
        raise ValueError(f"no nuclear charge tabulated for element {symbol!r}") from None


def shell(symbol: str, center) -> Shell:
    """Build the basis shell for ``symbol`` centered at ``center`` (Bohr)."""
    try:
        exps, contraction = _STO3G[symbol]
    except KeyError:
        raise ValueError(f"no basis data for element {symbol!r}") from None
    d = contraction * (2.0 * exps / np.pi) ** 0.75
    pair = exps[:, None] + exps[None, :]
    self_overlap = float(d @ ((np.pi / pair) ** 1.5) @ d)
    return Shell(
        center=np.asarray(center, dtype=float),
        exponents=exps.copy(),
        coefficients=d / np.sqrt(self_overlap),
    )
