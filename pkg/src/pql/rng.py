"""Counter-based random streams for reproducible, order-independent trials.

Draw ``j`` of the stream ``(master_seed, trial_index, tag)`` is a pure function
of those four integers (a SplitMix64 output), so any trial can be replayed in
isolation and batches can be generated vectorised without sharing state.
"""
from __future__ import annotations

import enum

import numpy as np
from scipy.special import ndtri

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO53 = 2.0 ** -53


class Tag(enum.IntEnum):
    """Independent stream families within one trial."""

    TARGET = 1
    LEARNER = 2
    CHANNEL = 3
    ADVERSARY = 4
    AUX = 5


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def stream_key(master_seed: int, trial_index: int, tag: int) -> int:
    k = mix64((master_seed & MASK) + GOLDEN)
    k = mix64(k ^ (int(tag) * 0xD1B54A32D192ED03 & MASK))
    return mix64(k + (trial_index & MASK) * GOLDEN)


def stream_keys(master_seed: int, trial_indices, tag: int) -> np.ndarray:
    """Vectorised :func:`stream_key` over an array of trial indices."""
    k = mix64((master_seed & MASK) + GOLDEN)
    k = mix64(k ^ (int(tag) * 0xD1B54A32D192ED03 & MASK))
    t = np.asarray(trial_indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(k) + t * np.uint64(GOLDEN)
    return mix64_array(z)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def raw_block(keys: np.ndarray, start: int, count: int) -> np.ndarray:
    """``raw[t, j] = mix64(keys[t] + (start + j + 1) * GOLDEN)`` as uint64."""
    keys = np.asarray(keys, dtype=np.uint64)
    j = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = keys[:, None] + j[None, :] * np.uint64(GOLDEN)
    return mix64_array(z)


def to_unit(raw: np.ndarray) -> np.ndarray:
    """Top 53 bits as a double in ``[0, 1)``."""
    return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * _TWO53


def to_open_unit(raw: np.ndarray) -> np.ndarray:
    """Top 53 bits, centred, as a double in ``(0, 1)``; safe for quantile transforms."""
    return ((np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO53


class TrialStream:
    """Random stream for one (master seed, trial, tag) triple.

    Draws are addressed by position; ``uniform(j)`` is the same value however
    many other draws were taken before it.
    """

    __slots__ = ("master_seed", "trial_index", "tag", "key")

    def __init__(self, master_seed: int, trial_index: int, tag: int):
        self.master_seed = master_seed
        self.trial_index = trial_index
        self.tag = Tag(tag)
        self.key = stream_key(master_seed, trial_index, tag)

    def raw(self, j: int) -> int:
        return mix64(self.key + (j + 1) * GOLDEN)

    def raws(self, count: int, start: int = 0) -> np.ndarray:
        return raw_block(np.array([self.key], dtype=np.uint64), start, count)[0]

    def uniform(self, j: int = 0) -> float:
        return (self.raw(j) >> 11) * _TWO53

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        return to_unit(self.raws(count, start))

    def normals(self, count: int, start: int = 0) -> np.ndarray:
        return ndtri(to_open_unit(self.raws(count, start)))

    def __repr__(self):
        return f"TrialStream(seed={self.master_seed}, trial={self.trial_index}, tag={self.tag.name})"


def derive_trial_seed(master_seed: int, trial_index: int, stream_tag: int | str) -> TrialStream:
    """Stream for one trial and purpose; tags keep e.g. target draws independent of the adversary."""
    if isinstance(stream_tag, str):
        stream_tag = Tag[stream_tag.upper()]
    return TrialStream(master_seed, trial_index, stream_tag)
