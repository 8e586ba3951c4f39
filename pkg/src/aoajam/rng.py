"""Counter-based seed derivation.

Every random draw in a simulation comes from a Philox generator whose key is
derived from ``(master_seed, *path)``. A trial's stream therefore depends only
on its own path, never on how many trials were requested.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "as_generator"]


def substream(master_seed: int, *path: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))


def as_generator(seed) -> np.random.Generator:
    """Accepts an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return substream(seed)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples: real and imaginary parts each N(0, 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
