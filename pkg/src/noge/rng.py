"""Seeded randomness.

Every random stream is a Philox-4x64 counter-based generator keyed by a
``SeedSequence`` built from ``(seed, stream, *extra)``. Streams are named so
that adding a new consumer never shifts an existing one.
"""
from __future__ import annotations

import numpy as np

STREAMS = {"init": 0, "shuffle": 1, "data": 2}


def make_rng(seed: int, stream: str, *extra: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, STREAMS[stream], *map(int, extra)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
