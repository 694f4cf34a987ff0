"""Splittable deterministic seed derivation.

Seeds for ensemble members, bootstrap subsets, and pair draws are derived by
hashing (master_seed, role, indices...) so that jobs can run in parallel, in
any order, on any worker count, and still produce identical results.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """64-bit seed from a tuple of ints/strings via BLAKE2b (platform stable)."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def rng_for(*parts) -> np.random.Generator:
    """PCG64 generator keyed by the derived seed of ``parts``."""
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))
