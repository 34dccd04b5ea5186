"""Counter-based random number streams.

Every Monte Carlo trial draws from its own Philox substream keyed by
(master_seed, trial_index), so trial i is reproducible in isolation and
results never depend on scheduling or batch boundaries.
"""
from __future__ import annotations

import numpy as np

# Philox keys are 128-bit; pack the master seed in the high word and the
# trial index in the low word.
_KEY_WORD = 1 << 64


def substream(master_seed: int, trial_index: int) -> np.random.Generator:
    """Return the generator for one trial of one experiment."""
    if master_seed < 0 or trial_index < 0:
        raise ValueError("master_seed and trial_index must be non-negative")
    key = (int(master_seed) % _KEY_WORD) * _KEY_WORD + int(trial_index)
    return np.random.Generator(np.random.Philox(key=key))


def complex_standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussians: Re and Im i.i.d. N(0, 1/2).

    E|c|^2 = 1. Drawn as one real block of fixed layout so the stream
    position is independent of how callers slice the result.
    """
    block = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return np.sqrt(0.5) * (block[..., 0] + 1j * block[..., 1])
