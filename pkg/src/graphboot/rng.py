"""Seeded random number streams.

Every stochastic operation in the package draws from a
``numpy.random.Generator``. The contract is reproducibility: the same seed
always yields the same draw sequence. Independent streams (model init vs.
per-epoch augmentation vs. per-run probe init) are derived from one master
seed with ``spawn`` so that changing how one stream is consumed never
perturbs another.
"""

from __future__ import annotations

import numpy as np

RngState = np.random.Generator


def make_rng(seed: int) -> RngState:
    """Create a generator from a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def spawn(seed: int, n: int) -> list[RngState]:
    """Derive ``n`` independent, reproducible streams from one seed."""
    seqs = np.random.SeedSequence(int(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in seqs]
