"""Deterministic randomness.

Every stochastic operation takes an integer seed. Experiments derive
per-operation seeds from one master seed with a counter scheme:

    derive_seed(master, repetition, stage, feature, ...)

which is ``numpy.random.SeedSequence(entropy=master, spawn_key=counters)``
reduced to one uint64. Equal counters give equal seeds; any change in any
counter gives an independent stream.
"""

from typing import Union

import numpy as np

from src.errors import InvalidParameterError

RngSeed = int

MAX_SEED = 2**64 - 1

# Stage counters used across the code base, so that sub-seeds never collide.
STAGE_SPLIT = 0
STAGE_DATA = 1
STAGE_MODEL = 2
STAGE_SAMPLER = 3
STAGE_ESTIMATE = 4
STAGE_VARIANCE = 5
STAGE_REDUCED = 6


def check_seed(seed: Union[int, np.integer]) -> int:
    """Validate an unsigned 64-bit seed and return it as a Python int."""
    value = int(seed)
    if not 0 <= value <= MAX_SEED:
        raise InvalidParameterError(f"Seed must be an unsigned 64-bit integer, got {seed}")
    return value


def derive_seed(master: RngSeed, *counters: int) -> RngSeed:
    """
    Derive a sub-seed from a master seed and a tuple of counters.

    Args:
        master: Experiment master seed
        *counters: Nonnegative integers identifying the operation

    Returns:
        Unsigned 64-bit sub-seed
    """
    if any(c < 0 for c in counters):
        raise InvalidParameterError("Seed counters must be nonnegative")
    sequence = np.random.SeedSequence(entropy=check_seed(master), spawn_key=tuple(counters))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def rng_from(seed: RngSeed) -> np.random.Generator:
    """Create a PCG64 generator from a seed."""
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
