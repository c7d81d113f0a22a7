"""Shared helpers for the scan-generator tests.

The consumer is driven strictly through its command line and file formats;
nothing here imports from it.
"""

from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np

TWO_DETERMINANT_ANSATZ = {
    "n_qubits": 4,
    "gates": [
        {"type": "rot", "angle": math.pi / 2, "pauli": "XIII"},
        {"type": "rot", "angle": math.pi / 2, "pauli": "IXII"},
        {"type": "param", "index": 0, "generator": [{"g": 1.0, "pauli": "YXXX"}]},
    ],
}


def write_ansatz(path) -> str:
    """The paired-rotation circuit: both reference spin orbitals are filled,
    then one generator rotates weight between the reference and the doubly
    excited determinant.  Spin symmetry confines the ground state to that
    two-dimensional block, so the single parameter reaches it exactly."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(TWO_DETERMINANT_ANSATZ, handle, indent=2)
    return str(path)


def run_consumer(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "vqederiv.cli", *argv],
        capture_output=True,
        text=True,
    )


def run_generator(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "hamgen_chem.cli", *argv],
        capture_output=True,
        text=True,
    )


def read_scan_csv(path):
    """Header and float rows of a scan CSV; blank cells become nan."""
    with open(path, encoding="utf-8") as handle:
        lines = [l for l in handle.read().splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    rows = np.array(
        [[float(cell) if cell else np.nan for cell in line.split(",")] for line in lines[1:]]
    )
    return header, rows
