"""Deterministic named substreams from one master seed.

All randomness in a run flows from a single 64-bit seed through named
substreams ("fit", "boot:17", ...), so results are reproducible and
independent of worker scheduling: every consumer owns its stream.
"""

from __future__ import annotations

import numpy as np


def _tag_ints(tag):
    return [b for b in str(tag).encode("utf-8")]


def substream(seed, *tags):
    """Generator for a named substream of the master seed."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for tag in tags:
        entropy.extend(_tag_ints(tag))
    return np.random.default_rng(np.random.SeedSequence(entropy))
