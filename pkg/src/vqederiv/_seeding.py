"""Stable derivation of per-task RNG seeds from a single master seed.

Every sampled quantity in the package draws from a generator seeded through
derive_seed, so results are independent of evaluation order and of whether
tasks run serially or in a pool.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts: object) -> int:
    """Map (master seed, task labels) to a 63-bit seed, stably across runs."""
    text = repr((int(master),) + tuple(parts)).encode()
    digest = hashlib.sha256(text).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)
