"""Deterministic random streams.

All randomness in the package flows through numpy's Philox generator, a
64-bit counter-based bit generator. Streams are identified by explicit
integer keys, so any sample (a forcing draw, a weight init, an epoch's
node subsample) can be regenerated in isolation on any platform.

Key layout: Philox takes a two-word key [stream_seed, index]. Dataset
splits use stream_seed = base_seed + SPLIT_OFFSETS[split] and index =
sample position; training uses stream_seed = config seed and a small
fixed index per purpose (weights, subsampling).
"""

import numpy as np

SPLIT_OFFSETS = {"train": 0, "test1": 1, "test2": 2, "test3": 3}

# fixed sub-stream indices for training
STREAM_INIT = 0
STREAM_SUBSAMPLE = 1
STREAM_MATRIX = 2

_MASK = (1 << 64) - 1


def philox(stream_seed, index=0):
    """Generator for stream (stream_seed, index). Both words wrap mod 2^64."""
    key = np.array([int(stream_seed) & _MASK, int(index) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def split_seed(base_seed, split):
    if split not in SPLIT_OFFSETS:
        raise KeyError(f"unknown split {split!r}")
    return (int(base_seed) + SPLIT_OFFSETS[split]) & _MASK
