"""Seeded random streams.

Every generator is a :class:`numpy.random.Philox` (counter-based, 64-bit)
wrapped in :class:`numpy.random.Generator`. One integer seed fans out into
independent per-stage streams through :class:`numpy.random.SeedSequence`, so
switching a stage on or off never shifts the numbers another stage sees.
"""
from __future__ import annotations

import numpy as np

STAGES = {
    "gen": 1,
    "embedding": 2,
    "ice": 3,
    "sampling": 4,
    "photon": 5,
    "spinbath": 6,
    "readout": 7,
    "unembed": 8,
    "exact": 9,
}


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def stage_rng(seed: int, stage: str, *extra: int) -> np.random.Generator:
    """Generator for one pipeline stage derived from the global seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(STAGES[stage], *extra))
    return np.random.Generator(np.random.Philox(ss))


def stage_seed(seed: int, stage: str, *extra: int) -> int:
    """Integer seed for APIs that take an int, derived like :func:`stage_rng`."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(STAGES[stage], *extra))
    return int(ss.generate_state(2, np.uint64)[0] >> np.uint64(1))
