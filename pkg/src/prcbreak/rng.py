"""Seeded generators.

Every randomized operation takes ``seed``: an int, a ``SeedSequence`` or an
existing ``Generator``.  Ints are expanded with ``SeedSequence`` and fed to
PCG64, so runs are reproducible across machines for a given numpy version.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn(seed, count: int) -> list[np.random.Generator]:
    """Independent child generators, stable for a fixed parent seed."""
    if isinstance(seed, np.random.Generator):
        return list(seed.spawn(count))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(count)]

