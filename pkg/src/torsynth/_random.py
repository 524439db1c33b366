"""Seeded random streams.

Every random draw in the package comes from ``numpy.random.Generator`` backed
by PCG64 (64-bit permuted congruential generator), seeded explicitly. Child
streams are derived with ``SeedSequence`` so that e.g. tree ``i`` of a forest
gets the same stream no matter which order trees are built in.
"""
import numpy as np


def make_rng(seed, *keys):
    """Return a PCG64 generator for ``seed``, optionally keyed by extra ints."""
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def child_seeds(seed, n):
    """Deterministic list of ``n`` independent integer seeds derived from ``seed``."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(n)]
