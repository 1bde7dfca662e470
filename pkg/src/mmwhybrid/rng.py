"""Deterministic random-stream derivation.

A run is keyed by a single 64-bit seed.  Every sweep point and trial
gets its own generator derived from (seed, sweep id, point index, trial
index) through numpy's SeedSequence, which hashes the entropy words
counter-style, so streams are independent and stable across runs,
process counts, and execution order.
"""

from __future__ import annotations

import numpy as np

SWEEP_BA = 1
SWEEP_SE = 2
SWEEP_GENERIC = 3


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream addressed by (seed, *path).

    Path components must be non-negative integers; identical addresses
    always yield identical streams.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if any(p < 0 for p in path):
        raise ValueError("stream path components must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *path])))
