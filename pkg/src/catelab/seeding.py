"""Seed derivation and random-stream construction.

All randomness in catelab flows through :func:`make_rng`, which builds a
NumPy ``Generator`` backed by PCG64 (128-bit state) seeded through
``SeedSequence``. Replication streams are never shared: each replication
gets its own 64-bit seed from :func:`derive_seed`, so results do not depend
on the order in which replications are executed.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(value):
    """SplitMix64 finalizer applied to ``value`` taken modulo 2**64."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed, index):
    """Mix a master seed and a stream index into an independent 64-bit seed.

    The mix is ``splitmix64(splitmix64(master_seed) + (index + 1) * gamma)``
    with ``gamma = 0x9E3779B97F4A7C15``. Negative indices are rejected.
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    return splitmix64(splitmix64(int(master_seed)) + (int(index) + 1) * _GOLDEN_GAMMA)


def make_rng(seed):
    """Return a PCG64-backed ``numpy.random.Generator`` for ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & _MASK64)))
