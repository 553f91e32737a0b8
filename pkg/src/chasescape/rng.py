"""Deterministic random-stream derivation.

Every stochastic routine takes either an explicit ``numpy.random.Generator``
or a 64-bit master seed from which per-task streams are split.  Streams are
derived counter-style through ``SeedSequence((master_seed, *path))`` where
``path`` is a tuple of integers identifying the task (experiment tag, cell
key, replication index).  Splitting a grid across processes or re-running a
subset therefore reproduces the exact per-replication streams.

The generator algorithm is PCG64; manifests record it so outputs remain
comparable across tool versions.
"""

import numpy as np

GENERATOR_NAME = "numpy-PCG64/SeedSequence"

# Experiment namespace tags, part of the derivation path.
TAG_SIMULATE = 1
TAG_SWEEP = 2
TAG_THETA = 3
TAG_SAW = 4
TAG_LOCAL_SURVIVAL = 5
TAG_PERCOLATION = 6


def derive_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for (master_seed, *path)."""
    entropy = (int(master_seed),) + tuple(int(p) for p in path)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def float_key(value: float) -> int:
    """Stable integer key for a float parameter (its IEEE-754 bit pattern).

    Used to derive sweep-cell streams from the cell's parameter values
    rather than its grid position, so splitting a sweep into sub-grids
    reproduces the exact rows of the full sweep.
    """
    return int(np.float64(value).view(np.uint64))
