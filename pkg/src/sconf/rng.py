"""Deterministic random streams.

Every stochastic operation in this package takes an explicit integer seed and
builds its generator here. Streams are Philox counter-based generators keyed
by (seed, *stream): the same key always reproduces the same draws bit for bit,
and distinct stream tags under one seed are statistically independent, so
parallel trials can share a seed without sharing state.
"""

import numpy as np


def make_rng(seed, *stream):
    """Return a fresh numpy Generator for the given (seed, *stream) key."""
    key = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(int(t) for t in stream)
    )
    return np.random.Generator(np.random.Philox(key))
