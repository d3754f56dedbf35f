"""
Seed handling shared by the sampling, bootstrap and simulation code.

All randomness flows through numpy Generators. Child streams are derived from
(master_seed, index) pairs so any work split keyed by that index reproduces the
same numbers regardless of scheduling.
"""

from typing import Optional, Union

import numpy as np

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    """Return a Generator; passes Generators through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed sequence for child stream `index` of `master_seed`."""
    return np.random.SeedSequence([int(master_seed), int(index)])


def child_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, index))


def fresh_seed() -> int:
    """Draw a new 32-bit master seed from OS entropy."""
    return int(np.random.SeedSequence().entropy % (2 ** 32))


def resolve_seed(seed: Optional[int]) -> int:
    return fresh_seed() if seed is None else int(seed)
