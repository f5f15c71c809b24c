"""Per-song batch sampling: a batch never mixes examples from two songs."""

from __future__ import annotations

import math
from typing import Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def song_batches(examples: Sequence[T], batch_size: int, rng: np.random.Generator) -> list[list[T]]:
    """Shuffle one song's examples and cut them into batches.

    When more than one batch is needed the shuffled sequence is padded with
    its own head so the last batch is full. A song that fits in a single
    batch gives one (possibly short) batch without padding.
    """
    m = len(examples)
    if m == 0:
        return []
    order = rng.permutation(m)
    n = math.ceil(m / batch_size)
    if n > 1:
        r = n * batch_size - m
        order = np.concatenate([order, order[:r]])
    return [[examples[i] for i in order[k * batch_size:(k + 1) * batch_size]] for k in range(n)]


def epoch_batches(songs: Sequence[Sequence[T]], batch_size: int,
                  rng: np.random.Generator) -> list[list[T]]:
    """Batches for one epoch, song by song in the given order."""
    if batch_size < 2:
        raise ValueError("batch size must be >= 2")
    out: list[list[T]] = []
    for examples in songs:
        out.extend(song_batches(examples, batch_size, rng))
    return out
