"""Deterministic RNG derivation.

Every random draw in the library comes from a generator built by
``rng_from(seed, *path)``.  The path is a tuple of small integers naming the
consumer (stream tag, cell indices, sample index, ...), so independent
components never share generator state and results are reproducible from a
single master seed.
"""

from __future__ import annotations

import numpy as np

# Stream tags.  Fixed constants, never reordered: changing them changes
# every derived stream.
STREAM_TEMPLATES = 1
STREAM_TRAIN_DATA = 2
STREAM_TEST_DATA = 3
STREAM_INIT = 4
STREAM_SHUFFLE = 5
STREAM_RC_SIGNS = 6
STREAM_RC_RESTART = 7
STREAM_EXPERIMENT_DATA = 8
STREAM_EXPERIMENT_CELL = 9
STREAM_LIFT = 10
STREAM_ORTHANT_DATA = 11


def child_seed(seed: int, *path: int) -> np.random.SeedSequence:
    """Split ``seed`` along ``path``; same inputs give the same sequence."""
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, path)])


def rng_from(seed: int, *path: int) -> np.random.Generator:
    """A fresh PCG64 generator for the stream named by ``(seed, *path)``."""
    return np.random.Generator(np.random.PCG64(child_seed(seed, *path)))


def sign_vector(rng: np.random.Generator, m: int) -> np.ndarray:
    """Rademacher +-1 vector of length ``m``."""
    return rng.integers(0, 2, size=m).astype(np.float64) * 2.0 - 1.0
