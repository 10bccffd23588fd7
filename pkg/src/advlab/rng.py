"""Deterministic seed derivation.

All randomness flows from a single integer master seed. Sub-streams are
derived by hashing the master seed together with a string label and any
number of integer indices, so every component (a sample's attack noise, a
layer's dropout mask, an epoch's shuffle) can be recomputed in isolation
and is independent of evaluation order or batch composition.
"""

import hashlib

import numpy as np

_MASK63 = (1 << 63) - 1


def derive_seed(master: int, label: str, *indices: int) -> int:
    """63-bit sub-seed for (master, label, indices)."""
    parts = [str(int(master)), str(label)]
    parts.extend(str(int(i)) for i in indices)
    digest = hashlib.sha256(":".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _MASK63


def rng_for(master: int, label: str, *indices: int) -> np.random.Generator:
    """Generator seeded by :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(master, label, *indices))
