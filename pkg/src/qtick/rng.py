"""Seeded random sources.

Every stochastic routine in qtick takes an object with a ``random()`` method
returning a float in [0, 1). ``numpy.random.Generator`` is used by default;
``random.Random`` works just as well.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x):
    """One output of the SplitMix64 mixer for state ``x`` (64-bit integers)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed, index):
    """Seed for sub-run ``index`` of a simulation seeded with ``seed``.

    Serial and parallel executions use the same derivation, so per-run
    results never depend on scheduling. The seed is mixed before the index is
    added, so neighbouring seeds do not share sub-run streams.
    """
    return splitmix64((splitmix64(int(seed) & _MASK64) + int(index)) & _MASK64)


def make_rng(seed):
    return np.random.default_rng(int(seed) & _MASK64)
