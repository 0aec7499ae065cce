"""Stable seed derivation for reproducible optimization runs.

Every stochastic component (annealer walkers, pool generators, GA operators)
draws its randomness from a numpy PCG64 generator seeded through this module,
so results are identical across processes, platforms and thread counts.
"""

import hashlib

import numpy as np


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from a sequence of ints/strings/tuples.

    Python's builtin hash() is salted per process; this uses blake2b so the
    same key always yields the same seed.
    """
    key = "|".join(repr(p) for p in parts)
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(*parts) -> np.random.Generator:
    """Generator seeded from a stable key."""
    return np.random.Generator(np.random.PCG64(stable_seed(*parts)))
