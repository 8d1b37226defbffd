"""Deterministic seed derivation.

Every stochastic component in this package draws from a numpy PCG64
generator whose seed is derived from a user-supplied 64-bit root seed.
Sub-streams (one per trajectory, episode, restart, ...) are derived with
a splitmix64 hash of (seed, index), so independently seeded generators
can be constructed in any order, on any worker, and still reproduce the
same streams.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """One round of the splitmix64 finalizer (Steele et al. mixing constants)."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def spawn_seed(seed: int, index: int) -> int:
    """Derive the sub-seed for stream `index` of root `seed`."""
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return splitmix64((seed + (index + 1) * _GOLDEN) & _MASK64)


def generator(seed: int) -> np.random.Generator:
    """A fresh PCG64 generator for a (sub-)seed."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
