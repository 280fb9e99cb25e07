"""Deterministic random streams.

All generators in this package draw from numpy PCG64 streams. A dataset is
fully determined by one 64-bit master seed: sample i uses the child seed
``sample_seed(master, i)``, so any single sample can be regenerated without
replaying the whole set. Child derivation goes through ``SeedSequence`` so
streams with nearby seeds stay statistically independent.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def sample_seed(master_seed: int, index: int) -> int:
    """64-bit seed for sample `index` of a set keyed by `master_seed`."""
    ss = np.random.SeedSequence([int(master_seed) & _MASK64, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def split(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """n independent child streams of an existing generator."""
    return [make_rng(s) for s in rng.integers(0, _MASK64, size=n, dtype=np.uint64)]
